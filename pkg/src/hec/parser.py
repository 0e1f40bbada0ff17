"""Recursive-descent parser for the whitelisted MLIR subset.

Grammar (see docs/grammar.ebnf): named affine maps, `func.func` bodies built
from `affine.for`, `affine.load`, `affine.store`, `affine.apply`,
`arith.constant`, the arith binary ops, and `return`. Named maps are resolved
at use sites; `min`/`max` are accepted only in loop-bound positions.
"""

from __future__ import annotations

import re

from .affine import AffineExpr, AffineMap, Bin, Const, Dim, Sym
from .errors import SyntaxError_, UnsupportedOperation
from .ir import (
    ARITH_OPS,
    AffineForOp,
    ApplyOp,
    BinaryOp,
    Bound,
    ConstantOp,
    FuncDef,
    INDEX,
    IndexType,
    IntType,
    LoadOp,
    MemRefType,
    ProgramModule,
    ReturnOp,
    StoreOp,
)
from .lexer import tokenize

_MEMREF_RE = re.compile(r"^((?:\d+|\?)(?:x(?:\d+|\?))*)x(i\d+)$")


class _Stream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead=0):
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self):
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind, text=None):
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise SyntaxError_(f"expected {want}, found {t.text!r}", t.span)
        return self.next()

    def accept(self, kind, text=None):
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None


class _Scope:
    def __init__(self, parent=None):
        self.parent = parent
        self.names = {}

    def define(self, name, type_, span):
        cur = self
        while cur:
            if name in cur.names:
                raise SyntaxError_(f"redefinition of {name}", span)
            cur = cur.parent
        self.names[name] = type_

    def lookup(self, name):
        cur = self
        while cur:
            if name in cur.names:
                return cur.names[name]
            cur = cur.parent
        return None


class _Parser:
    def __init__(self, tokens):
        self.ts = _Stream(tokens)
        self.maps = {}

    # -- types

    def parse_type(self):
        t = self.ts.peek()
        if t.kind == "ident" and re.fullmatch(r"i\d+", t.text):
            self.ts.next()
            return IntType(int(t.text[1:]))
        if t.kind == "ident" and t.text == "index":
            self.ts.next()
            return INDEX
        if t.kind == "ident" and t.text == "memref":
            return self.parse_memref_type()
        raise SyntaxError_(f"expected a type, found {t.text!r}", t.span)

    def parse_memref_type(self):
        start = self.ts.expect("ident", "memref")
        self.ts.expect("langle")
        pieces = []
        while True:
            t = self.ts.peek()
            if t.kind == "rangle":
                self.ts.next()
                break
            if t.kind == "eof":
                raise SyntaxError_("unterminated memref type", start.span)
            pieces.append(self.ts.next().text)
        text = "".join(pieces)
        m = _MEMREF_RE.match(text)
        if not m:
            raise SyntaxError_(f"malformed memref type memref<{text}>", start.span)
        shape = tuple(None if d == "?" else int(d) for d in m.group(1).split("x"))
        return MemRefType(shape, IntType(int(m.group(2)[1:])))

    # -- affine expressions (inline form, over SSA operands)

    def parse_expr_list(self, scope, allow_minmax):
        operands = []
        seen = {}

        def dim_of(name, span):
            type_ = scope.lookup(name)
            if type_ is None:
                raise SyntaxError_(f"use of undefined value {name}", span)
            if not isinstance(type_, IndexType):
                raise SyntaxError_(f"{name} is not index-typed", span)
            if name not in seen:
                seen[name] = len(operands)
                operands.append(name)
            return Dim(seen[name])

        exprs = [self._expr(scope, dim_of, allow_minmax)]
        while self.ts.accept("comma"):
            exprs.append(self._expr(scope, dim_of, allow_minmax))
        return Bound(tuple(exprs), tuple(operands))

    def _expr(self, scope, dim_of, allow_minmax):
        e = self._term(scope, dim_of, allow_minmax)
        while True:
            if self.ts.accept("plus"):
                e = Bin("add", e, self._term(scope, dim_of, allow_minmax))
            elif self.ts.accept("minus"):
                rhs = self._term(scope, dim_of, allow_minmax)
                e = Bin("add", e, Bin("mul", rhs, Const(-1)))
            else:
                return e

    def _term(self, scope, dim_of, allow_minmax):
        e = self._factor(scope, dim_of, allow_minmax)
        while True:
            if self.ts.accept("star"):
                e = Bin("mul", e, self._factor(scope, dim_of, allow_minmax))
            elif self.ts.peek().kind == "ident" and self.ts.peek().text in ("floordiv", "mod"):
                kind = self.ts.next().text
                t = self.ts.peek()
                d = self._factor(scope, dim_of, allow_minmax)
                if not isinstance(d, Const) or d.value <= 0:
                    raise SyntaxError_(f"{kind} divisor must be a positive constant", t.span)
                e = Bin(kind, e, d)
            else:
                return e

    def _factor(self, scope, dim_of, allow_minmax):
        t = self.ts.peek()
        if t.kind == "int":
            self.ts.next()
            return Const(int(t.text))
        if t.kind == "minus":
            self.ts.next()
            inner = self._factor(scope, dim_of, allow_minmax)
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Bin("mul", inner, Const(-1))
        if t.kind == "ssa":
            self.ts.next()
            return dim_of(t.text, t.span)
        if t.kind == "lparen":
            self.ts.next()
            e = self._expr(scope, dim_of, allow_minmax)
            self.ts.expect("rparen")
            return e
        if t.kind == "ident" and t.text in ("min", "max"):
            if not allow_minmax:
                raise SyntaxError_(f"{t.text} is only allowed in loop bounds", t.span)
            self.ts.next()
            self.ts.expect("lparen")
            a = self._expr(scope, dim_of, allow_minmax)
            self.ts.expect("comma")
            b = self._expr(scope, dim_of, allow_minmax)
            self.ts.expect("rparen")
            return Bin(t.text, a, b)
        raise SyntaxError_(f"expected an affine expression, found {t.text!r}", t.span)

    # -- affine map definitions and applications

    def parse_map_def(self):
        name_tok = self.ts.expect("mapref")
        self.ts.expect("equals")
        self.ts.expect("ident", "affine_map")
        self.ts.expect("langle")
        dims, syms = [], []
        self.ts.expect("lparen")
        while self.ts.peek().kind != "rparen":
            dims.append(self.ts.expect("ident").text)
            if not self.ts.accept("comma"):
                break
        self.ts.expect("rparen")
        if self.ts.accept("lbracket"):
            while self.ts.peek().kind != "rbracket":
                syms.append(self.ts.expect("ident").text)
                if not self.ts.accept("comma"):
                    break
            self.ts.expect("rbracket")
        self.ts.expect("arrow")
        self.ts.expect("lparen")
        results = [self._map_expr(dims, syms)]
        while self.ts.accept("comma"):
            results.append(self._map_expr(dims, syms))
        self.ts.expect("rparen")
        self.ts.expect("rangle")
        if name_tok.text in self.maps:
            raise SyntaxError_(f"redefinition of map {name_tok.text}", name_tok.span)
        self.maps[name_tok.text] = AffineMap(len(dims), len(syms), tuple(results))

    def _map_expr(self, dims, syms):
        # Map bodies reuse the expression parser with d/s identifiers as atoms.
        def dim_of_names(name, span):
            raise SyntaxError_("SSA values are not allowed inside affine_map", span)

        saved = self._factor

        def factor(scope, dim_of, allow_minmax):
            t = self.ts.peek()
            if t.kind == "ident" and t.text in dims:
                self.ts.next()
                return Dim(dims.index(t.text))
            if t.kind == "ident" and t.text in syms:
                self.ts.next()
                return Sym(syms.index(t.text))
            return saved(scope, dim_of, allow_minmax)

        self._factor = factor
        try:
            return self._expr(None, dim_of_names, allow_minmax=True)
        finally:
            self._factor = saved

    def parse_map_application(self, scope):
        """#map(%d...)[%s...] resolved into a Bound over the given operands."""
        tok = self.ts.expect("mapref")
        amap = self.maps.get(tok.text)
        if amap is None:
            raise SyntaxError_(f"use of undefined map {tok.text}", tok.span)
        dim_args, sym_args = [], []
        self.ts.expect("lparen")
        while self.ts.peek().kind != "rparen":
            dim_args.append(self._index_operand(scope))
            if not self.ts.accept("comma"):
                break
        self.ts.expect("rparen")
        if self.ts.accept("lbracket"):
            while self.ts.peek().kind != "rbracket":
                sym_args.append(self._index_operand(scope))
                if not self.ts.accept("comma"):
                    break
            self.ts.expect("rbracket")
        if len(dim_args) != amap.num_dims or len(sym_args) != amap.num_syms:
            raise SyntaxError_(f"map {tok.text} applied to wrong operand count", tok.span)
        operands = tuple(dim_args + sym_args)
        subst_dims = [Dim(i) for i in range(len(dim_args))]
        subst_syms = [Dim(len(dim_args) + i) for i in range(len(sym_args))]
        exprs = tuple(_subst_positions(e, subst_dims, subst_syms) for e in amap.results)
        return Bound(exprs, operands)

    def _index_operand(self, scope):
        t = self.ts.expect("ssa")
        type_ = scope.lookup(t.text)
        if type_ is None:
            raise SyntaxError_(f"use of undefined value {t.text}", t.span)
        if not isinstance(type_, IndexType):
            raise SyntaxError_(f"{t.text} is not index-typed", t.span)
        return t.text

    def parse_bound(self, scope, position):
        """A loop bound: a map application or an inline expression.

        Multi-result maps follow MLIR semantics: max of results for lower
        bounds, min of results for upper bounds.
        """
        if self.ts.peek().kind == "mapref":
            b = self.parse_map_application(scope)
            fold = "max" if position == "lower" else "min"
            expr = b.exprs[0]
            for e in b.exprs[1:]:
                expr = Bin(fold, expr, e)
            return Bound((expr,), b.operands)
        b = self.parse_expr_list(scope, allow_minmax=True)
        if len(b.exprs) != 1:
            raise SyntaxError_("loop bound must be a single expression", self.ts.peek().span)
        return b

    # -- operations

    def parse_ops(self, scope, namer):
        ops = []
        while True:
            t = self.ts.peek()
            if t.kind in ("rbrace", "eof"):
                return tuple(ops)
            ops.append(self.parse_op(scope, namer))

    def parse_op(self, scope, namer):
        t = self.ts.peek()
        if t.kind == "ident" and t.text == "affine.for":
            return self.parse_for(scope, namer)
        if t.kind == "ident" and t.text == "affine.store":
            return self.parse_store(scope)
        if t.kind == "ident" and t.text in ("return", "func.return"):
            self.ts.next()
            return ReturnOp()
        if t.kind == "ssa":
            return self.parse_assignment(scope)
        if t.kind == "ident" and "." in t.text:
            raise UnsupportedOperation(t.text, t.span)
        raise SyntaxError_(f"expected an operation, found {t.text!r}", t.span)

    def parse_for(self, scope, namer):
        self.ts.expect("ident", "affine.for")
        iv = self.ts.expect("ssa")
        self.ts.expect("equals")
        lower = self.parse_bound(scope, "lower")
        self.ts.expect("ident", "to")
        upper = self.parse_bound(scope, "upper")
        step = 1
        if self.ts.accept("ident", "step"):
            step_tok = self.ts.expect("int")
            step = int(step_tok.text)
            if step < 1:
                raise SyntaxError_("step must be positive", step_tok.span)
        self.ts.expect("lbrace")
        body_scope = _Scope(scope)
        body_scope.define(iv.text, INDEX, iv.span)
        body = self.parse_ops(body_scope, namer)
        self.ts.expect("rbrace")
        return AffineForOp(iv.text, lower, upper, step, body)

    def parse_store(self, scope):
        self.ts.expect("ident", "affine.store")
        value = self.ts.expect("ssa")
        vtype = scope.lookup(value.text)
        if vtype is None:
            raise SyntaxError_(f"use of undefined value {value.text}", value.span)
        self.ts.expect("comma")
        mem = self.ts.expect("ssa")
        mtype = scope.lookup(mem.text)
        if not isinstance(mtype, MemRefType):
            raise SyntaxError_(f"{mem.text} is not a memref", mem.span)
        self.ts.expect("lbracket")
        indices = self.parse_expr_list(scope, allow_minmax=False)
        self.ts.expect("rbracket")
        if self.ts.accept("colon"):
            declared = self.parse_memref_type()
            if declared != mtype:
                raise SyntaxError_(f"type mismatch: {mem.text} is {mtype}", mem.span)
        if len(indices.exprs) != mtype.rank:
            raise SyntaxError_(f"rank mismatch on {mem.text}", mem.span)
        if vtype != mtype.element:
            raise SyntaxError_(f"stored value type {vtype} != element {mtype.element}", value.span)
        return StoreOp(value.text, mem.text, indices, mtype.element)

    def parse_assignment(self, scope):
        result = self.ts.expect("ssa")
        self.ts.expect("equals")
        op_tok = self.ts.expect("ident")
        name = op_tok.text

        if name == "arith.constant":
            return self._finish_constant(scope, result)
        if name == "affine.load":
            return self._finish_load(scope, result)
        if name == "affine.apply":
            return self._finish_apply(scope, result)
        if name.startswith("arith."):
            short = name[len("arith."):]
            if short in ARITH_OPS:
                return self._finish_binop(scope, result, short)
            raise UnsupportedOperation(name, op_tok.span)
        raise UnsupportedOperation(name, op_tok.span)

    def _finish_constant(self, scope, result):
        t = self.ts.peek()
        if t.kind == "ident" and t.text in ("true", "false"):
            self.ts.next()
            value, type_ = (1 if t.text == "true" else 0), IntType(1)
            if self.ts.accept("colon"):
                declared = self.parse_type()
                if declared != type_:
                    raise SyntaxError_("true/false constants are i1", t.span)
        else:
            neg = bool(self.ts.accept("minus"))
            lit = self.ts.expect("int")
            value = -int(lit.text) if neg else int(lit.text)
            self.ts.expect("colon")
            type_ = self.parse_type()
            if isinstance(type_, MemRefType):
                raise SyntaxError_("constants cannot be memref-typed", lit.span)
            if isinstance(type_, IntType):
                value = type_.wrap(value)
        scope.define(result.text, type_, result.span)
        return ConstantOp(result.text, value, type_)

    def _finish_load(self, scope, result):
        mem = self.ts.expect("ssa")
        mtype = scope.lookup(mem.text)
        if not isinstance(mtype, MemRefType):
            raise SyntaxError_(f"{mem.text} is not a memref", mem.span)
        self.ts.expect("lbracket")
        indices = self.parse_expr_list(scope, allow_minmax=False)
        self.ts.expect("rbracket")
        if self.ts.accept("colon"):
            declared = self.parse_memref_type()
            if declared != mtype:
                raise SyntaxError_(f"type mismatch: {mem.text} is {mtype}", mem.span)
        if len(indices.exprs) != mtype.rank:
            raise SyntaxError_(f"rank mismatch on {mem.text}", mem.span)
        scope.define(result.text, mtype.element, result.span)
        return LoadOp(result.text, mem.text, indices, mtype.element)

    def _finish_apply(self, scope, result):
        if self.ts.peek().kind == "mapref":
            bound = self.parse_map_application(scope)
        else:
            bound = self.parse_expr_list(scope, allow_minmax=False)
        if len(bound.exprs) != 1:
            raise SyntaxError_("affine.apply yields a single value", self.ts.peek().span)
        scope.define(result.text, INDEX, result.span)
        return ApplyOp(result.text, bound)

    def _finish_binop(self, scope, result, short):
        a = self.ts.expect("ssa")
        self.ts.expect("comma")
        b = self.ts.expect("ssa")
        self.ts.expect("colon")
        type_ = self.parse_type()
        if not isinstance(type_, IntType):
            raise SyntaxError_(f"arith.{short} requires an integer type", a.span)
        for operand in (a, b):
            ot = scope.lookup(operand.text)
            if ot is None:
                raise SyntaxError_(f"use of undefined value {operand.text}", operand.span)
            if ot != type_:
                raise SyntaxError_(f"operand {operand.text} has type {ot}, expected {type_}", operand.span)
        scope.define(result.text, type_, result.span)
        return BinaryOp(result.text, short, a.text, b.text, type_)

    # -- module / functions

    def parse_function(self):
        self.ts.expect("ident", "func.func")
        name = self.ts.expect("symref")
        self.ts.expect("lparen")
        args = []
        scope = _Scope()
        while self.ts.peek().kind != "rparen":
            arg = self.ts.expect("ssa")
            self.ts.expect("colon")
            type_ = self.parse_type()
            scope.define(arg.text, type_, arg.span)
            args.append((arg.text, type_))
            if not self.ts.accept("comma"):
                break
        self.ts.expect("rparen")
        self.ts.expect("lbrace")
        body = self.parse_ops(scope, None)
        self.ts.expect("rbrace")
        return FuncDef(name.text[1:], tuple(args), body)

    def parse_module(self):
        functions = []
        while True:
            t = self.ts.peek()
            if t.kind == "eof":
                break
            if t.kind == "mapref":
                self.parse_map_def()
            elif t.kind == "ident" and t.text == "func.func":
                functions.append(self.parse_function())
            elif t.kind == "ident" and "." in t.text:
                raise UnsupportedOperation(t.text, t.span)
            else:
                raise SyntaxError_(f"expected a map or function, found {t.text!r}", t.span)
        return ProgramModule(dict(self.maps), tuple(functions))


def _subst_positions(expr, dims, syms):
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, Dim):
        return dims[expr.position]
    if isinstance(expr, Sym):
        return syms[expr.position]
    assert isinstance(expr, Bin)
    return Bin(expr.kind, _subst_positions(expr.lhs, dims, syms), _subst_positions(expr.rhs, dims, syms))


def parse_module(tokens) -> ProgramModule:
    """Parse a token sequence (or raw text) into a validated ProgramModule."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return _Parser(tokens).parse_module()
