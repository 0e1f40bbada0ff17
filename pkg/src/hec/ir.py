"""AST types for the textual MLIR subset, plus a pretty-printer.

The parser resolves named affine maps at use sites, so every op carries its
index expressions inline (an AffineExpr over dim positions plus an ordered
operand list, mirroring MLIR map-application semantics). The named map table
is still kept on the module for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .affine import AffineExpr, AffineMap, Bin, Const, Dim


@dataclass(frozen=True)
class IntType:
    bitwidth: int  # 1..64, signless with two's-complement wrap

    def __post_init__(self):
        if not 1 <= self.bitwidth <= 64:
            raise ValueError(f"unsupported bitwidth {self.bitwidth}")

    @property
    def mask(self) -> int:
        return (1 << self.bitwidth) - 1

    def wrap(self, value: int) -> int:
        return value & self.mask

    def to_signed(self, value: int) -> int:
        value &= self.mask
        sign = 1 << (self.bitwidth - 1)
        return value - (1 << self.bitwidth) if value & sign else value

    def __str__(self):
        return f"i{self.bitwidth}"


@dataclass(frozen=True)
class IndexType:
    def __str__(self):
        return "index"


INDEX = IndexType()


@dataclass(frozen=True)
class MemRefType:
    shape: tuple  # ints, or None for '?'
    element: IntType

    def __str__(self):
        dims = "x".join("?" if d is None else str(d) for d in self.shape)
        return f"memref<{dims}x{self.element}>"

    @property
    def rank(self) -> int:
        return len(self.shape)


@dataclass(frozen=True)
class Bound:
    """An affine bound or index list: expressions over operand positions."""

    exprs: tuple  # tuple[AffineExpr, ...] over Dim(i) -> operands[i]
    operands: tuple  # tuple[str, ...] SSA names, all index-typed

    @property
    def expr(self) -> AffineExpr:
        assert len(self.exprs) == 1
        return self.exprs[0]


def const_bound(v: int) -> Bound:
    return Bound((Const(v),), ())


def name_bound(name: str) -> Bound:
    return Bound((Dim(0),), (name,))


# --- operations -------------------------------------------------------------


@dataclass(frozen=True)
class ConstantOp:
    result: str
    value: int
    type: object  # IntType or IndexType


@dataclass(frozen=True)
class BinaryOp:
    result: str
    op: str  # addi subi muli divsi andi ori xori shli shrsi
    lhs: str
    rhs: str
    type: IntType


ARITH_OPS = ("addi", "subi", "muli", "divsi", "andi", "ori", "xori", "shli", "shrsi")


@dataclass(frozen=True)
class ApplyOp:
    result: str
    bound: Bound  # single expression


@dataclass(frozen=True)
class LoadOp:
    result: str
    memref: str
    indices: Bound
    type: IntType


@dataclass(frozen=True)
class StoreOp:
    value: str
    memref: str
    indices: Bound
    type: IntType


@dataclass(frozen=True)
class AffineForOp:
    induction_var: str
    lower: Bound  # inclusive
    upper: Bound  # exclusive
    step: int
    body: tuple  # ordered ops

    def __post_init__(self):
        if self.step < 1:
            raise ValueError("loop step must be >= 1")


@dataclass(frozen=True)
class ReturnOp:
    pass


@dataclass(frozen=True)
class FuncDef:
    name: str
    args: tuple  # tuple[(name, type), ...]
    body: tuple


@dataclass
class ProgramModule:
    affine_maps: dict = field(default_factory=dict)  # name -> AffineMap
    functions: tuple = ()

    def function(self, name: str) -> FuncDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def function_names(self):
        return [f.name for f in self.functions]


# --- pretty printer ---------------------------------------------------------


def _expr_str(e: AffineExpr, operands) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Dim):
        return operands[e.position]
    assert isinstance(e, Bin)
    if e.kind in ("min", "max"):
        return f"{e.kind}({_expr_str(e.lhs, operands)}, {_expr_str(e.rhs, operands)})"
    sep = {"add": "+", "mul": "*", "floordiv": "floordiv", "mod": "mod"}[e.kind]
    lhs = _expr_str(e.lhs, operands)
    rhs = _expr_str(e.rhs, operands)
    if isinstance(e.lhs, Bin) and e.kind != "add":
        lhs = f"({lhs})"
    if isinstance(e.rhs, Bin):
        rhs = f"({rhs})"
    return f"{lhs} {sep} {rhs}"


def bound_str(b: Bound, joiner: str = ", ") -> str:
    return joiner.join(_expr_str(e, b.operands) for e in b.exprs)


def _print_op(op, out, indent):
    pad = "  " * indent
    if isinstance(op, ConstantOp):
        if isinstance(op.type, IntType) and op.type.bitwidth == 1:
            lit = "true" if op.value else "false"
            out.append(f"{pad}{op.result} = arith.constant {lit}")
        else:
            out.append(f"{pad}{op.result} = arith.constant {op.value} : {op.type}")
    elif isinstance(op, BinaryOp):
        out.append(f"{pad}{op.result} = arith.{op.op} {op.lhs}, {op.rhs} : {op.type}")
    elif isinstance(op, ApplyOp):
        out.append(f"{pad}{op.result} = affine.apply {bound_str(op.bound)}")
    elif isinstance(op, LoadOp):
        out.append(f"{pad}{op.result} = affine.load {op.memref}[{bound_str(op.indices)}]")
    elif isinstance(op, StoreOp):
        out.append(f"{pad}affine.store {op.value}, {op.memref}[{bound_str(op.indices)}]")
    elif isinstance(op, AffineForOp):
        step = f" step {op.step}" if op.step != 1 else ""
        out.append(
            f"{pad}affine.for {op.induction_var} = {bound_str(op.lower)}"
            f" to {bound_str(op.upper)}{step} {{"
        )
        for child in op.body:
            _print_op(child, out, indent + 1)
        out.append(f"{pad}}}")
    elif isinstance(op, ReturnOp):
        out.append(f"{pad}return")
    else:
        raise TypeError(f"unknown op {op!r}")


def pretty_print(module: ProgramModule) -> str:
    out = []
    for f in module.functions:
        args = ", ".join(f"{n}: {t}" for n, t in f.args)
        out.append(f"func.func @{f.name}({args}) {{")
        for op in f.body:
            _print_op(op, out, 1)
        out.append("}")
        out.append("")
    return "\n".join(out)
