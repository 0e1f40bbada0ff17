"""Quasi-affine expressions: evaluation and canonical normalization.

Two layers live here. ``AffineExpr`` is the parse-level tree (dims, symbols,
constants, +, -, *const, floordiv, mod, min, max). ``LinForm`` is a canonical
linear combination of atoms plus a constant; floordiv/mod/min/max survive as
opaque atoms wrapping normalized sub-forms. Two expressions denote the same
function whenever their LinForms compare equal (the converse does not hold,
which is why condition checking falls back to evaluation).

Atoms are arbitrary hashable objects; the frontend uses dim/sym positions,
the term layer uses leaf names and loop-value terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .errors import UnboundOperand


# ---------------------------------------------------------------------------
# Parse-level expression tree


@dataclass(frozen=True)
class AffineExpr:
    def eval(self, dims: Sequence[int], syms: Sequence[int]) -> int:
        raise NotImplementedError

    def __add__(self, other):
        other = _coerce(other)
        if isinstance(self, Const) and isinstance(other, Const):
            return Const(self.value + other.value)
        return Bin("add", self, other)

    def __sub__(self, other):
        other = _coerce(other)
        return self + other * -1

    def __mul__(self, other):
        other = _coerce(other)
        if isinstance(self, Const) and isinstance(other, Const):
            return Const(self.value * other.value)
        return Bin("mul", self, other)

    def floordiv(self, d: int):
        return Bin("floordiv", self, Const(d))

    def mod(self, d: int):
        return Bin("mod", self, Const(d))


def _coerce(x) -> AffineExpr:
    return Const(x) if isinstance(x, int) else x


@dataclass(frozen=True)
class Const(AffineExpr):
    value: int

    def eval(self, dims, syms):
        return self.value


@dataclass(frozen=True)
class Dim(AffineExpr):
    position: int

    def eval(self, dims, syms):
        if self.position >= len(dims):
            raise UnboundOperand("dim", self.position)
        return dims[self.position]


@dataclass(frozen=True)
class Sym(AffineExpr):
    position: int

    def eval(self, dims, syms):
        if self.position >= len(syms):
            raise UnboundOperand("symbol", self.position)
        return syms[self.position]


@dataclass(frozen=True)
class Bin(AffineExpr):
    kind: str  # add | mul | floordiv | mod | min | max
    lhs: AffineExpr
    rhs: AffineExpr

    def eval(self, dims, syms):
        a = self.lhs.eval(dims, syms)
        b = self.rhs.eval(dims, syms)
        if self.kind == "add":
            return a + b
        if self.kind == "mul":
            return a * b
        if self.kind == "floordiv":
            return a // b  # rounds toward -inf
        if self.kind == "mod":
            return a % b  # result in [0, b) for b > 0
        if self.kind == "min":
            return min(a, b)
        if self.kind == "max":
            return max(a, b)
        raise ValueError(f"unknown kind {self.kind}")


def eval_affine_expr(expr: AffineExpr, dims: Sequence[int], syms: Sequence[int]) -> int:
    """Exact mathematical evaluation; floordiv rounds toward -inf."""
    return expr.eval(dims, syms)


@dataclass(frozen=True)
class AffineMap:
    """An affine map #name = affine_map<(d...)[s...] -> (e, ...)>."""

    num_dims: int
    num_syms: int
    results: tuple[AffineExpr, ...]

    def eval(self, dims: Sequence[int], syms: Sequence[int]) -> tuple[int, ...]:
        return tuple(e.eval(dims, syms) for e in self.results)


# ---------------------------------------------------------------------------
# Canonical linear forms


@dataclass(frozen=True)
class FloorAtom:
    """floor(body / divisor) with a normalized body; divisor > 0."""

    body: "LinForm"
    divisor: int


@dataclass(frozen=True)
class MinAtom:
    lhs: "LinForm"
    rhs: "LinForm"


@dataclass(frozen=True)
class MaxAtom:
    lhs: "LinForm"
    rhs: "LinForm"


def _atom_key(atom) -> str:
    if isinstance(atom, FloorAtom):
        return f"(floordiv {atom.body.key()} {atom.divisor})"
    if isinstance(atom, MinAtom):
        return f"(min {atom.lhs.key()} {atom.rhs.key()})"
    if isinstance(atom, MaxAtom):
        return f"(max {atom.lhs.key()} {atom.rhs.key()})"
    return str(atom)


class LinForm:
    """sum(coeff * atom) + const, with atoms sorted by a canonical key.

    Immutable; equal LinForms denote equal functions.
    """

    __slots__ = ("terms", "const", "_key")

    def __init__(self, terms=(), const: int = 0):
        cleaned = tuple(sorted(
            ((a, c) for a, c in terms if c != 0),
            key=lambda ac: _atom_key(ac[0]),
        ))
        object.__setattr__(self, "terms", cleaned)
        object.__setattr__(self, "const", const)
        object.__setattr__(self, "_key", None)

    # -- construction helpers

    @staticmethod
    def constant(c: int) -> "LinForm":
        return LinForm((), c)

    @staticmethod
    def atom(a, coeff: int = 1) -> "LinForm":
        return LinForm(((a, coeff),), 0)

    # -- algebra

    def _merge(self, other: "LinForm", sign: int) -> "LinForm":
        acc = dict(self.terms)
        for a, c in other.terms:
            acc[a] = acc.get(a, 0) + sign * c
        return LinForm(tuple(acc.items()), self.const + sign * other.const)

    def __add__(self, other):
        if isinstance(other, int):
            return LinForm(self.terms, self.const + other)
        return self._merge(other, 1)

    def __sub__(self, other):
        if isinstance(other, int):
            return LinForm(self.terms, self.const - other)
        return self._merge(other, -1)

    def scale(self, k: int) -> "LinForm":
        return LinForm(tuple((a, c * k) for a, c in self.terms), self.const * k)

    def is_const(self) -> bool:
        return not self.terms

    def floordiv(self, d: int) -> "LinForm":
        if d <= 0:
            raise ValueError("floordiv divisor must be positive")
        if d == 1:
            return self
        if self.is_const():
            return LinForm.constant(self.const // d)
        quotient = []
        rest = []
        for a, c in self.terms:
            q, r = divmod(c, d)
            if q:
                quotient.append((a, q))
            if r:
                rest.append((a, r))
        qc, rc = divmod(self.const, d)
        rem = LinForm(tuple(rest), rc)
        if rem.is_const():
            # 0 <= rc < d, so the remainder contributes nothing
            return LinForm(tuple(quotient), qc)
        # (x floordiv e) floordiv d == x floordiv (e*d) for positive e, d
        if not quotient and rem.const == 0 and len(rem.terms) == 1:
            a, c = rem.terms[0]
            if c == 1 and isinstance(a, FloorAtom):
                inner = LinForm.atom(FloorAtom(a.body, a.divisor * d))
                return inner + qc
        return LinForm(tuple(quotient), qc) + LinForm.atom(FloorAtom(rem, d))

    def mod(self, d: int) -> "LinForm":
        if d <= 0:
            raise ValueError("mod divisor must be positive")
        return self - self.floordiv(d).scale(d)

    def ceildiv(self, d: int) -> "LinForm":
        return (self + (d - 1)).floordiv(d)

    @staticmethod
    def min_of(a: "LinForm", b: "LinForm") -> "LinForm":
        diff = a - b
        if diff.is_const():
            return a if diff.const <= 0 else b
        lo, hi = sorted((a, b), key=LinForm.key)
        return LinForm.atom(MinAtom(lo, hi))

    @staticmethod
    def max_of(a: "LinForm", b: "LinForm") -> "LinForm":
        diff = a - b
        if diff.is_const():
            return a if diff.const >= 0 else b
        lo, hi = sorted((a, b), key=LinForm.key)
        return LinForm.atom(MaxAtom(lo, hi))

    # -- queries

    def key(self) -> str:
        if self._key is None:
            parts = [f"{c}*{_atom_key(a)}" for a, c in self.terms]
            parts.append(str(self.const))
            object.__setattr__(self, "_key", " + ".join(parts))
        return self._key

    def __eq__(self, other):
        return isinstance(other, LinForm) and self.terms == other.terms and self.const == other.const

    def __hash__(self):
        return hash((self.terms, self.const))

    def __repr__(self):
        return f"LinForm({self.key()})"

    def coeff_of(self, atom) -> int:
        for a, c in self.terms:
            if a == atom:
                return c
        return 0

    def drop(self, atom) -> "LinForm":
        return LinForm(tuple((a, c) for a, c in self.terms if a != atom), self.const)

    def base_atoms(self) -> set:
        out = set()
        for a, _ in self.terms:
            if isinstance(a, FloorAtom):
                out |= a.body.base_atoms()
            elif isinstance(a, (MinAtom, MaxAtom)):
                out |= a.lhs.base_atoms() | a.rhs.base_atoms()
            else:
                out.add(a)
        return out

    def eval(self, valuation: Callable[[Any], int]) -> int:
        total = self.const
        for a, c in self.terms:
            if isinstance(a, FloorAtom):
                v = a.body.eval(valuation) // a.divisor
            elif isinstance(a, MinAtom):
                v = min(a.lhs.eval(valuation), a.rhs.eval(valuation))
            elif isinstance(a, MaxAtom):
                v = max(a.lhs.eval(valuation), a.rhs.eval(valuation))
            else:
                v = valuation(a)
            total += c * v
        return total

    def map_atoms(self, fn) -> "LinForm":
        """Rename base atoms via ``fn`` (no renormalization; fn must be injective)."""
        terms = []
        for a, c in self.terms:
            if isinstance(a, FloorAtom):
                terms.append((FloorAtom(a.body.map_atoms(fn), a.divisor), c))
            elif isinstance(a, MinAtom):
                terms.append((MinAtom(a.lhs.map_atoms(fn), a.rhs.map_atoms(fn)), c))
            elif isinstance(a, MaxAtom):
                terms.append((MaxAtom(a.lhs.map_atoms(fn), a.rhs.map_atoms(fn)), c))
            else:
                terms.append((fn(a), c))
        return LinForm(tuple(terms), self.const)

    def substitute(self, mapping: dict) -> "LinForm":
        """Replace base atoms per ``mapping`` (atom -> LinForm) and renormalize."""
        out = LinForm.constant(self.const)
        for a, c in self.terms:
            if isinstance(a, FloorAtom):
                out = out + a.body.substitute(mapping).floordiv(a.divisor).scale(c)
            elif isinstance(a, MinAtom):
                out = out + LinForm.min_of(a.lhs.substitute(mapping), a.rhs.substitute(mapping)).scale(c)
            elif isinstance(a, MaxAtom):
                out = out + LinForm.max_of(a.lhs.substitute(mapping), a.rhs.substitute(mapping)).scale(c)
            elif a in mapping:
                out = out + mapping[a].scale(c)
            else:
                out = out + LinForm.atom(a, c)
        return out


def linearize(expr: AffineExpr, dim_atoms: Sequence, sym_atoms: Sequence) -> LinForm:
    """Normalize an AffineExpr into a LinForm over caller-chosen atoms."""
    if isinstance(expr, Const):
        return LinForm.constant(expr.value)
    if isinstance(expr, Dim):
        if expr.position >= len(dim_atoms):
            raise UnboundOperand("dim", expr.position)
        return LinForm.atom(dim_atoms[expr.position])
    if isinstance(expr, Sym):
        if expr.position >= len(sym_atoms):
            raise UnboundOperand("symbol", expr.position)
        return LinForm.atom(sym_atoms[expr.position])
    assert isinstance(expr, Bin)
    a = linearize(expr.lhs, dim_atoms, sym_atoms)
    b = linearize(expr.rhs, dim_atoms, sym_atoms)
    if expr.kind == "add":
        return a + b
    if expr.kind == "mul":
        if b.is_const():
            return a.scale(b.const)
        if a.is_const():
            return b.scale(a.const)
        raise ValueError("product of two non-constant affine expressions")
    if expr.kind == "floordiv":
        if not b.is_const():
            raise ValueError("floordiv divisor must be constant")
        return a.floordiv(b.const)
    if expr.kind == "mod":
        if not b.is_const():
            raise ValueError("mod divisor must be constant")
        return a.mod(b.const)
    if expr.kind == "min":
        return LinForm.min_of(a, b)
    if expr.kind == "max":
        return LinForm.max_of(a, b)
    raise ValueError(f"unknown kind {expr.kind}")
