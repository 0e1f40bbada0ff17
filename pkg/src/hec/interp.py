"""Bit-precise reference executor for the MLIR subset.

Used as the differential-testing oracle and the counterexample producer.
Loops run with inclusive-lower/exclusive-upper/step semantics; arith ops
wrap at their bitwidth; index arithmetic is exact. Division by zero and
over-wide shifts trap (TrappedOperation) rather than producing a value.

``run_stmt_term`` executes block/forcontrol/combine terms directly; it is an
independent second evaluator used to vet dynamically generated rules before
they are registered.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .affine import LinForm
from .errors import (
    NonTermination,
    OutOfBounds,
    SignatureMismatch,
    TrappedOperation,
)
from .ir import (
    AffineForOp,
    ApplyOp,
    BinaryOp,
    ConstantOp,
    IndexType,
    IntType,
    LoadOp,
    MemRefType,
    ProgramModule,
    ReturnOp,
    StoreOp,
)
from .terms import Term, int_leaf_value, term_to_lin

DEFAULT_STEP_LIMIT = 10**8


@dataclass
class MemoryState:
    """Per-memref flat integer arrays with declared extents and element type."""

    arrays: dict = field(default_factory=dict)  # name -> list[int]
    shapes: dict = field(default_factory=dict)  # name -> tuple[int, ...]
    elements: dict = field(default_factory=dict)  # name -> IntType

    def add(self, name, shape, element, values=None):
        size = 1
        for d in shape:
            size *= d
        self.arrays[name] = list(values) if values is not None else [0] * size
        self.shapes[name] = tuple(shape)
        self.elements[name] = element
        return self

    def clone(self):
        m = MemoryState()
        for name in self.arrays:
            m.add(name, self.shapes[name], self.elements[name], self.arrays[name])
        return m

    def flat_index(self, name, indices):
        shape = self.shapes[name]
        if len(indices) != len(shape):
            raise OutOfBounds(name, tuple(indices))
        flat = 0
        for d, i in zip(shape, indices):
            if not 0 <= i < d:
                raise OutOfBounds(name, tuple(indices))
            flat = flat * d + i
        return flat

    def load(self, name, indices):
        return self.arrays[name][self.flat_index(name, indices)]

    def store(self, name, indices, value):
        self.arrays[name][self.flat_index(name, indices)] = self.elements[name].wrap(value)

    def diff(self, other):
        """First (memref, flat index, self value, other value) divergence."""
        for name in self.arrays:
            a, b = self.arrays[name], other.arrays[name]
            for i, (x, y) in enumerate(zip(a, b)):
                if x != y:
                    return (name, i, x, y)
        return None


@dataclass
class Counterexample:
    symbols: dict
    memory: MemoryState  # initial state reproducing the divergence
    divergence: dict  # {"kind": "memory", "memref", "index", "value_a", "value_b"}
    function: str = ""

    def to_json(self):
        return {
            "function": self.function,
            "symbols": dict(self.symbols),
            "initial_memory": {k: list(v) for k, v in self.memory.arrays.items()},
            "divergence": dict(self.divergence),
        }


def _binop(op, a, b, type_: IntType):
    w = type_.bitwidth
    if op == "addi":
        return type_.wrap(a + b)
    if op == "subi":
        return type_.wrap(a - b)
    if op == "muli":
        return type_.wrap(a * b)
    if op == "andi":
        return a & b
    if op == "ori":
        return a | b
    if op == "xori":
        return a ^ b
    if op == "shli":
        if not 0 <= b < w:
            raise TrappedOperation(f"shift amount {b} out of range for i{w}")
        return type_.wrap(a << b)
    if op == "shrsi":
        if not 0 <= b < w:
            raise TrappedOperation(f"shift amount {b} out of range for i{w}")
        return type_.wrap(type_.to_signed(a) >> b)
    if op == "divsi":
        if b == 0:
            raise TrappedOperation("division by zero")
        sa, sb = type_.to_signed(a), type_.to_signed(b)
        q = abs(sa) // abs(sb)
        if (sa < 0) != (sb < 0):
            q = -q
        return type_.wrap(q)
    raise ValueError(op)


class _Exec:
    def __init__(self, memory, step_limit):
        self.memory = memory
        self.steps = 0
        self.limit = step_limit

    def tick(self):
        self.steps += 1
        if self.steps > self.limit:
            raise NonTermination(self.limit)


def interpret(module: ProgramModule, symbols=None, initial: MemoryState = None,
              function: str = None, step_limit: int = DEFAULT_STEP_LIMIT) -> MemoryState:
    """Execute one function; returns the final memory state (input untouched).

    ``symbols`` binds the function's index-typed arguments by name;
    ``initial`` must hold an array per memref argument.
    """
    func = module.function(function) if function else module.functions[0]
    memory = (initial or MemoryState()).clone()
    env = {}
    for name, type_ in func.args:
        if isinstance(type_, MemRefType):
            if name not in memory.arrays:
                raise SignatureMismatch(f"no array bound for {name}")
        elif isinstance(type_, IndexType):
            if symbols is None or name not in symbols:
                raise SignatureMismatch(f"no value bound for index argument {name}")
            env[name] = symbols[name]
    ex = _Exec(memory, step_limit)
    _run_ops(func.body, env, ex)
    return memory


def _eval_bound(bound, env, which=0):
    return bound.exprs[which].eval([env[n] for n in bound.operands], ())


def _run_ops(ops, env, ex):
    for op in ops:
        ex.tick()
        if isinstance(op, ConstantOp):
            env[op.result] = op.value
        elif isinstance(op, BinaryOp):
            env[op.result] = _binop(op.op, env[op.lhs], env[op.rhs], op.type)
        elif isinstance(op, ApplyOp):
            env[op.result] = _eval_bound(op.bound, env)
        elif isinstance(op, LoadOp):
            idx = [e.eval([env[n] for n in op.indices.operands], ()) for e in op.indices.exprs]
            env[op.result] = ex.memory.load(op.memref, idx)
        elif isinstance(op, StoreOp):
            idx = [e.eval([env[n] for n in op.indices.operands], ()) for e in op.indices.exprs]
            ex.memory.store(op.memref, idx, env[op.value])
        elif isinstance(op, AffineForOp):
            lo = _eval_bound(op.lower, env)
            hi = _eval_bound(op.upper, env)
            i = lo
            saved = env.get(op.induction_var)
            while i < hi:
                ex.tick()
                env[op.induction_var] = i
                _run_ops(op.body, env, ex)
                i += op.step
            env[op.induction_var] = saved
        elif isinstance(op, ReturnOp):
            return
        else:
            raise TypeError(f"unknown op {op!r}")


# --- term execution (independent straight-line evaluator) -------------------


def run_stmt_term(term: Term, env: dict, memory: MemoryState,
                  step_limit: int = DEFAULT_STEP_LIMIT, _ex=None):
    """Execute a block / forcontrol / combine / store term.

    ``env`` maps expression atoms (forvalue terms, %arg leaves) to ints.
    """
    ex = _ex or _Exec(memory, step_limit)
    _run_term(term, dict(env), ex)
    return ex.memory


def _run_term(t: Term, env, ex):
    ex.tick()
    if t.label == "block":
        for c in t.children:
            if c.label in ("block", "forcontrol", "combine") or c.label.startswith("store_"):
                _run_term(c, env, ex)
            else:
                _eval_term(c, env, ex)  # value-only child: evaluate for effects' sake
        return
    if t.label == "combine":
        for c in t.children:
            _run_term(c, env, ex)
        return
    if t.label == "forcontrol":
        fv, body = t.children
        lo = _eval_lin(term_to_lin(fv.children[0]), env, ex)
        hi = _eval_lin(term_to_lin(fv.children[1]), env, ex)
        step = int(fv.children[2].label)
        i = lo
        while i < hi:
            env2 = dict(env)
            env2[fv] = i
            _run_term(body, env2, ex)
            i += step
            ex.tick()
        return
    if t.label.startswith("store_"):
        width = int(t.label.split("_i")[1])
        value = _eval_term(t.children[0], env, ex)
        fanin = t.children[1]
        mem = fanin.children[0].label
        idx = [_eval_lin(term_to_lin(c), env, ex) for c in fanin.children[1:]]
        ex.memory.store(mem, idx, IntType(width).wrap(value))
        return
    _eval_term(t, env, ex)


def _eval_lin(lin: LinForm, env, ex):
    def valuation(atom):
        if atom in env:
            return env[atom]
        if isinstance(atom, Term):
            v = int_leaf_value(atom)
            if v is not None:
                return v
        raise SignatureMismatch(f"unbound atom {atom}")

    return lin.eval(valuation)


def _eval_term(t: Term, env, ex):
    ex.tick()
    if t in env:
        return env[t]
    if t.is_leaf:
        v = int_leaf_value(t)
        if v is None:
            raise SignatureMismatch(f"unbound leaf {t.label}")
        return v
    if t.label.startswith("load_"):
        fanin = t.children[0]
        mem = fanin.children[0].label
        idx = [_eval_lin(term_to_lin(c), env, ex) for c in fanin.children[1:]]
        return ex.memory.load(mem, idx)
    if t.label.startswith("arith_"):
        base, _, w = t.label.rpartition("_i")
        type_ = IntType(int(w))
        a = _eval_term(t.children[0], env, ex)
        b = _eval_term(t.children[1], env, ex)
        return _binop(base[len("arith_"):], a, b, type_)
    if t.label.startswith("not_"):
        width = int(t.label.split("_i")[1])
        return _eval_term(t.children[0], env, ex) ^ ((1 << width) - 1)
    # index expression
    return _eval_lin(term_to_lin(t), env, ex)


# --- differential testing ---------------------------------------------------


@dataclass
class DifferentialOutcome:
    counterexample: Counterexample | None
    trapped: bool = False
    samples_run: int = 0


def _signature(func):
    return tuple(
        ("mem", t.shape, t.element.bitwidth) if isinstance(t, MemRefType) else ("index",)
        for _, t in func.args
    )


def _resolve_shape(shape, extent_default):
    return tuple(extent_default if d is None else d for d in shape)


def _sample_inputs(func, rng, extent_default, symbol_range, sample_kind):
    """One (symbols, memory) input; corners first, then random."""
    symbols = {}
    memory = MemoryState()
    lo, hi = symbol_range
    for name, type_ in func.args:
        if isinstance(type_, MemRefType):
            shape = _resolve_shape(type_.shape, extent_default)
            size = 1
            for d in shape:
                size *= d
            mask = type_.element.mask
            if sample_kind == "zero":
                vals = [0] * size
            elif sample_kind == "ones":
                vals = [mask] * size
            elif sample_kind == "ramp":
                vals = [i & mask for i in range(size)]
            else:
                vals = [rng.randrange(0, mask + 1) for _ in range(size)]
            memory.add(name, shape, type_.element, vals)
        elif isinstance(type_, IndexType):
            if sample_kind == "zero":
                symbols[name] = max(lo, 0)
            elif sample_kind == "ones":
                symbols[name] = max(lo, 1)
            elif sample_kind == "ramp":
                symbols[name] = min(max(lo, 7), hi - 1)
            else:
                if rng.random() < 0.5:
                    symbols[name] = min(hi - 1, lo + rng.randrange(0, 17))
                else:
                    symbols[name] = rng.randrange(lo, hi)
    return symbols, memory


def differential_test(module_a: ProgramModule, module_b: ProgramModule, samples: int = 200,
                      seed: int = 0, function: str = None, symbol_range=(0, 1 << 16),
                      symbol_sample_cap: int = 64, extent_default: int = 32,
                      priority_symbols=None, step_limit: int = DEFAULT_STEP_LIMIT,
                      shrink: bool = True) -> DifferentialOutcome:
    """Run both programs on seeded pseudo-random inputs; first divergence wins.

    ``priority_symbols`` (a list of symbol bindings, e.g. refutation
    witnesses from condition checking) are tried before random sampling.
    """
    fa = module_a.function(function) if function else module_a.functions[0]
    fb = module_b.function(function) if function else module_b.functions[0]
    if _signature(fa) != _signature(fb):
        raise SignatureMismatch(f"{fa.name}: argument lists differ")
    rng = random.Random(seed)
    lo, hi = symbol_range
    hi = min(hi, lo + max(1, symbol_sample_cap))
    plans = []
    for prio in priority_symbols or []:
        plans.append(("priority", prio))
    plans += [("zero", None), ("ones", None), ("ramp", None)]
    for k in range(17):
        plans.append(("smallsym", k))
    while len(plans) < max(samples, len(plans)):
        plans.append(("random", None))
    plans = plans[: max(samples, 20 + len(priority_symbols or []))]

    trapped = False
    outcome = DifferentialOutcome(None)
    for kind, extra in plans:
        outcome.samples_run += 1
        base_kind = {"priority": "ramp", "smallsym": "random"}.get(kind, kind)
        symbols, memory = _sample_inputs(fa, rng, extent_default, (lo, hi), base_kind)
        if kind == "priority":
            for name, type_ in fa.args:
                if isinstance(type_, IndexType) and name in extra:
                    symbols[name] = extra[name]
            # positional fallback for witnesses keyed by canonical %argN names
            index_args = [n for n, t in fa.args if isinstance(t, IndexType)]
            for pos, (argname, t) in enumerate(fa.args):
                key = f"%arg{pos}"
                if isinstance(t, IndexType) and key in extra:
                    symbols[argname] = extra[key]
            del index_args
        elif kind == "smallsym":
            for name, type_ in fa.args:
                if isinstance(type_, IndexType):
                    symbols[name] = lo + extra
        div = _run_pair(module_a, module_b, fa, fb, symbols, memory, step_limit)
        if div == "trap":
            trapped = True
            continue
        if div is not None:
            if shrink:
                symbols, memory, div = _shrink(module_a, module_b, fa, fb, symbols,
                                               memory, div, step_limit, lo)
            outcome.counterexample = Counterexample(
                symbols=symbols, memory=memory,
                divergence={"kind": "memory", "memref": div[0], "index": div[1],
                            "value_a": div[2], "value_b": div[3]},
                function=fa.name)
            outcome.trapped = trapped
            return outcome
    outcome.trapped = trapped
    return outcome


def _run_pair(module_a, module_b, fa, fb, symbols, memory, step_limit):
    sym_b = _rebind(symbols, fa, fb)
    mem_b = _rebind_memory(memory, fa, fb)
    try:
        out_a = interpret(module_a, symbols, memory, fa.name, step_limit)
        out_b = interpret(module_b, sym_b, mem_b, fb.name, step_limit)
    except (TrappedOperation, OutOfBounds, NonTermination):
        return "trap"
    out_b_names = _rebind_memory(out_b, fb, fa)
    return out_a.diff(out_b_names)


def _rebind(symbols, fa, fb):
    out = {}
    for (na, _), (nb, _) in zip(fa.args, fb.args):
        if na in symbols:
            out[nb] = symbols[na]
    return out


def _rebind_memory(memory, fa, fb):
    out = MemoryState()
    for (na, ta), (nb, _) in zip(fa.args, fb.args):
        if isinstance(ta, MemRefType) and na in memory.arrays:
            out.add(nb, memory.shapes[na], memory.elements[na], memory.arrays[na])
    return out


def _shrink(module_a, module_b, fa, fb, symbols, memory, div, step_limit, sym_lo):
    """Greedy input shrinking: shrink symbols toward the range floor, then
    zero memory cells, keeping the divergence alive."""
    def diverges(sym, mem):
        d = _run_pair(module_a, module_b, fa, fb, sym, mem, step_limit)
        return d if d not in (None, "trap") else None

    for name in sorted(symbols):
        for candidate in (sym_lo, sym_lo + 1, (symbols[name] + sym_lo) // 2, symbols[name] - 1):
            if sym_lo <= candidate < symbols[name]:
                trial = dict(symbols)
                trial[name] = candidate
                d = diverges(trial, memory)
                if d is not None:
                    symbols, div = trial, d
    total = sum(len(v) for v in memory.arrays.values())
    if total <= 4096:
        for name in sorted(memory.arrays):
            arr = memory.arrays[name]
            for i in range(len(arr)):
                if arr[i] != 0:
                    old = arr[i]
                    arr[i] = 0
                    d = diverges(symbols, memory)
                    if d is None:
                        arr[i] = old
                    else:
                        div = d
    return symbols, memory, div
