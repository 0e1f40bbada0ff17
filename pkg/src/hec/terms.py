"""Parenthesized operator terms: the alphabet shared by the dataflow graph,
the e-graph, and rewrite rules.

Leaves are SSA-ish names (%arg0, %i0), integer literals, width-tagged
constants (true / false / 5_i8), or pattern variables (?a). Interior labels:
block, forcontrol, forvalue, combine, fanin, typed op labels (arith_andi_i1,
load_i1, store_i1, not_i8), and the exact index operators add, mul, floordiv,
mod, min, max.

Index expressions are always emitted from normalized LinForms, so two
equal quasi-affine index functions print as the identical term.
"""

from __future__ import annotations

from dataclasses import dataclass

from .affine import FloorAtom, LinForm, MaxAtom, MinAtom
from .errors import MalformedTerm

EXPR_OPS = ("add", "mul", "floordiv", "mod", "min", "max")


@dataclass(frozen=True)
class Term:
    label: str
    children: tuple = ()

    @property
    def is_leaf(self):
        return not self.children

    @property
    def is_var(self):
        return self.label.startswith("?")

    def __str__(self):
        if self.is_leaf:
            return self.label
        return "(" + " ".join([self.label] + [str(c) for c in self.children]) + ")"

    def size(self):
        return 1 + sum(c.size() for c in self.children)

    def variables(self):
        if self.is_var:
            return {self.label}
        out = set()
        for c in self.children:
            out |= c.variables()
        return out

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


def leaf(x) -> Term:
    return Term(str(x))


def parse_term(text: str) -> Term:
    """Parse an s-expression term; raises MalformedTerm on bad input."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise MalformedTerm("unexpected end of term", pos)
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens) or tokens[pos] in "()":
                raise MalformedTerm("expected an operator label", pos)
            label = tokens[pos]
            pos += 1
            children = []
            while pos < len(tokens) and tokens[pos] != ")":
                children.append(parse())
            if pos >= len(tokens):
                raise MalformedTerm("missing ')'", pos)
            pos += 1
            return Term(label, tuple(children))
        if tok == ")":
            raise MalformedTerm("unexpected ')'", pos)
        return Term(tok)

    out = parse()
    if pos != len(tokens):
        raise MalformedTerm("trailing tokens after term", pos)
    return out


def int_leaf_value(t: Term):
    """The integer a leaf denotes, or None. Handles 5, -3, true, false, 7_i8."""
    if not t.is_leaf:
        return None
    s = t.label
    if s == "true":
        return 1
    if s == "false":
        return 0
    if "_i" in s:
        s = s.split("_i")[0]
    try:
        return int(s)
    except ValueError:
        return None


def const_leaf(value: int, width: int) -> Term:
    """Canonical width-tagged constant leaf."""
    value &= (1 << width) - 1
    if width == 1:
        return leaf("true" if value else "false")
    return leaf(f"{value}_i{width}")


# --- LinForm <-> Term -------------------------------------------------------


def lin_to_term(lin: LinForm) -> Term:
    """Deterministic term for a normalized LinForm (atoms are Terms)."""
    pieces = []
    for atom, coeff in lin.terms:
        at = _atom_to_term(atom)
        pieces.append(at if coeff == 1 else Term("mul", (at, leaf(coeff))))
    if lin.const != 0 or not pieces:
        pieces.append(leaf(lin.const))
    out = pieces[0]
    for p in pieces[1:]:
        out = Term("add", (out, p))
    return out


def _atom_to_term(atom) -> Term:
    if isinstance(atom, FloorAtom):
        return Term("floordiv", (lin_to_term(atom.body), leaf(atom.divisor)))
    if isinstance(atom, MinAtom):
        return Term("min", (lin_to_term(atom.lhs), lin_to_term(atom.rhs)))
    if isinstance(atom, MaxAtom):
        return Term("max", (lin_to_term(atom.lhs), lin_to_term(atom.rhs)))
    assert isinstance(atom, Term)
    return atom


def term_to_lin(t: Term) -> LinForm:
    """Read a term as a quasi-affine form. Non-expression subterms (leaves,
    forvalue terms) become atoms."""
    if t.is_leaf:
        v = int_leaf_value(t)
        if v is not None and "_i" not in t.label and t.label not in ("true", "false"):
            return LinForm.constant(v)
        return LinForm.atom(t)
    if t.label == "add":
        _check_arity(t, 2)
        return term_to_lin(t.children[0]) + term_to_lin(t.children[1])
    if t.label == "mul":
        _check_arity(t, 2)
        a = term_to_lin(t.children[0])
        b = term_to_lin(t.children[1])
        if b.is_const():
            return a.scale(b.const)
        if a.is_const():
            return b.scale(a.const)
        raise MalformedTerm(f"non-affine product in {t}")
    if t.label in ("floordiv", "mod"):
        _check_arity(t, 2)
        d = term_to_lin(t.children[1])
        if not d.is_const() or d.const <= 0:
            raise MalformedTerm(f"divisor must be a positive constant in {t}")
        body = term_to_lin(t.children[0])
        return body.floordiv(d.const) if t.label == "floordiv" else body.mod(d.const)
    if t.label == "min":
        _check_arity(t, 2)
        return LinForm.min_of(term_to_lin(t.children[0]), term_to_lin(t.children[1]))
    if t.label == "max":
        _check_arity(t, 2)
        return LinForm.max_of(term_to_lin(t.children[0]), term_to_lin(t.children[1]))
    return LinForm.atom(t)


def _check_arity(t, n):
    if len(t.children) != n:
        raise MalformedTerm(f"{t.label} expects {n} children, got {len(t.children)}")


def substitute_atoms(t: Term, mapping: dict) -> Term:
    """Replace expression atoms (e.g. forvalue terms) throughout ``t``,
    renormalizing every index expression they appear in.

    When a nested loop's bounds are rewritten, its forvalue term changes,
    so body references to that loop are remapped as well.
    """
    if t in mapping:
        return lin_to_term(mapping[t])
    if t.label in EXPR_OPS:
        return lin_to_term(term_to_lin(t).substitute(mapping))
    if t.is_leaf:
        return t
    if t.label == "forcontrol":
        fv, body = t.children
        fv2 = substitute_atoms(fv, mapping)
        inner = mapping
        if fv2 != fv:
            inner = dict(mapping)
            inner[fv] = LinForm.atom(fv2)
        return Term("forcontrol", (fv2, substitute_atoms(body, inner)))
    return Term(t.label, tuple(substitute_atoms(c, mapping) for c in t.children))


def substitute_atom(t: Term, old: Term, replacement: LinForm) -> Term:
    return substitute_atoms(t, {old: replacement})
