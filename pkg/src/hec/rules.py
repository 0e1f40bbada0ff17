"""Bitwidth-tagged datapath/gate-level rewrite rules.

Every rule is bidirectional and registered only after a mechanical soundness
gate: exhaustive truth/arithmetic-table equality under two's-complement wrap
for widths <= 8 (vectorized, chunked), 1e5 randomized evaluations above.
Labels carry the width (arith_andi_i8), so a rule can only ever match
operands of its own type.

The textual format for user rule files is one rule per line:

    (arith_xori_i1 ?a true) <=> (not_i1 ?a) : i1

with ``#`` comments. Bare integer literals are read at the rule's width.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import RuleSyntaxError, RuleUnsound
from .terms import Term, const_leaf, int_leaf_value, leaf, parse_term

_CHUNK = 1 << 20


@dataclass(frozen=True)
class StaticRule:
    name: str
    lhs: Term
    rhs: Term
    width: int
    bidirectional: bool = True

    def __str__(self):
        return f"{self.lhs} <=> {self.rhs} : i{self.width}"


def _suffix_width(label):
    if "_i" in label and label.split("_i")[-1].isdigit():
        return int(label.split("_i")[-1])
    return None


def _check_typed(term, width):
    for t in term.walk():
        w = _suffix_width(t.label) if not t.is_var else None
        if w is not None and w != width:
            raise RuleSyntaxError(f"label {t.label} does not match rule width i{width}")
        if t.is_leaf and t.label in ("true", "false") and width != 1:
            raise RuleSyntaxError("true/false literals are i1")


def _eval_term(term, env, width):
    """Vectorized evaluation over int64 arrays, wrapping at ``width``."""
    mask = (1 << width) - 1
    if term.is_leaf:
        if term.is_var:
            return env[term.label]
        v = int_leaf_value(term)
        if v is None:
            raise RuleSyntaxError(f"cannot evaluate leaf {term.label}")
        return np.int64(v & mask)
    a = _eval_term(term.children[0], env, width)
    b = _eval_term(term.children[1], env, width) if len(term.children) > 1 else None
    label = term.label.rsplit("_i", 1)[0]
    if label == "arith_addi":
        r = a + b
    elif label == "arith_subi":
        r = a - b
    elif label == "arith_muli":
        r = a * b
    elif label == "arith_andi":
        r = a & b
    elif label == "arith_ori":
        r = a | b
    elif label == "arith_xori":
        r = a ^ b
    elif label == "arith_shli":
        if np.any(b >= width) or np.any(b < 0):
            raise RuleUnsound(term.label, "shift amount out of range")
        r = a << b
    elif label == "arith_shrsi":
        if np.any(b >= width) or np.any(b < 0):
            raise RuleUnsound(term.label, "shift amount out of range")
        sign = 1 << (width - 1)
        r = ((a ^ sign) - sign) >> b
    elif label == "not":
        r = a ^ mask
    else:
        raise RuleSyntaxError(f"unknown operator {term.label}")
    return r & mask


def validate_rule(rule: StaticRule, rng_samples: int = 100_000):
    """Raise RuleUnsound with a counterexample if lhs != rhs anywhere."""
    lvars = sorted(rule.lhs.variables())
    rvars = sorted(rule.rhs.variables())
    if lvars != rvars:
        raise RuleSyntaxError(f"variable sets differ in {rule}")
    _check_typed(rule.lhs, rule.width)
    _check_typed(rule.rhs, rule.width)
    w, n = rule.width, len(lvars)
    mask = (1 << w) - 1
    if w <= 8:
        total = 1 << (w * n)
        for start in range(0, total, _CHUNK):
            idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
            env = {v: (idx >> (w * i)) & mask for i, v in enumerate(lvars)}
            _compare(rule, env, lvars)
    else:
        rng = np.random.default_rng(0)
        env = {v: rng.integers(0, mask + 1, size=rng_samples, dtype=np.int64) for v in lvars}
        _compare(rule, env, lvars)


def _compare(rule, env, names):
    lhs = _eval_term(rule.lhs, env, rule.width)
    rhs = _eval_term(rule.rhs, env, rule.width)
    neq = lhs != rhs
    if np.any(neq):
        i = int(np.argmax(neq))
        witness = {v: int(np.asarray(env[v]).flat[i] if np.ndim(env[v]) else env[v]) for v in names}
        raise RuleUnsound(str(rule), witness)


def _rule(name, lhs, rhs, width, validate=True):
    r = StaticRule(f"{name}_i{width}", parse_rule_side(lhs, width), parse_rule_side(rhs, width), width)
    if validate:
        validate_rule(r)
    return r


def parse_rule_side(text, width) -> Term:
    """Parse one side, normalizing bare integer literals to width-tagged
    constant leaves (true/false at i1)."""
    return _tag_consts(parse_term(text), width)


def _tag_consts(t, width):
    if t.is_leaf:
        if t.is_var:
            return t
        if t.label in ("true", "false"):
            return t
        v = int_leaf_value(t)
        if v is not None:
            return const_leaf(v, width)
        return t
    return Term(t.label, tuple(_tag_consts(c, width) for c in t.children))


def default_ruleset(widths=(1,), shift_amounts=None, validate=True):
    """The shipped static rules, instantiated per bitwidth.

    Includes the published datapath/gate-level rules (shift-to-multiply and
    shift rearrangements, multiply associativity, De Morgan, xor expansion,
    xor-with-zero, not-as-xor-with-ones) plus the documented standard
    identities (commutativity of +,*,&,|,^ and the +0, *1, &ones, |0
    identities). All are validated at registration.
    """
    rules = []
    for w in widths:
        s = f"_i{w}"
        ones = "true" if w == 1 else str((1 << w) - 1)
        rules += [
            _rule("comm_add", f"(arith_addi{s} ?a ?b)", f"(arith_addi{s} ?b ?a)", w, validate),
            _rule("comm_mul", f"(arith_muli{s} ?a ?b)", f"(arith_muli{s} ?b ?a)", w, validate),
            _rule("comm_and", f"(arith_andi{s} ?a ?b)", f"(arith_andi{s} ?b ?a)", w, validate),
            _rule("comm_or", f"(arith_ori{s} ?a ?b)", f"(arith_ori{s} ?b ?a)", w, validate),
            _rule("comm_xor", f"(arith_xori{s} ?a ?b)", f"(arith_xori{s} ?b ?a)", w, validate),
            _rule("assoc_mul", f"(arith_muli{s} (arith_muli{s} ?a ?b) ?c)",
                  f"(arith_muli{s} ?a (arith_muli{s} ?b ?c))", w, validate),
            _rule("add_zero", f"(arith_addi{s} ?a 0)", "?a", w, validate),
            _rule("mul_one", f"(arith_muli{s} ?a 1)", "?a", w, validate),
            _rule("and_ones", f"(arith_andi{s} ?a {ones})", "?a", w, validate),
            _rule("or_zero", f"(arith_ori{s} ?a 0)", "?a", w, validate),
            _rule("xor_zero", f"(arith_xori{s} ?a 0)", "?a", w, validate),
            _rule("not_xor_ones", f"(not{s} ?a)", f"(arith_xori{s} ?a {ones})", w, validate),
            _rule("demorgan", f"(not{s} (arith_andi{s} ?a ?b))",
                  f"(arith_ori{s} (not{s} ?a) (not{s} ?b))", w, validate),
            _rule("xor_expand", f"(arith_xori{s} ?a ?b)",
                  f"(arith_ori{s} (arith_andi{s} ?a (not{s} ?b)) (arith_andi{s} (not{s} ?a) ?b))",
                  w, validate),
        ]
        amounts = shift_amounts if shift_amounts is not None else range(0, min(w, 9))
        for bamt in sorted(set(amounts)):
            if not 0 <= bamt < w:
                continue
            two_b = (1 << bamt) % (1 << w)
            rules.append(_rule(f"shl{bamt}_to_mul", f"(arith_shli{s} ?a {bamt})",
                               f"(arith_muli{s} ?a {two_b})", w, validate))
            rules.append(_rule(f"shl{bamt}_mul_swap", f"(arith_shli{s} (arith_muli{s} ?a ?b) {bamt})",
                               f"(arith_muli{s} (arith_shli{s} ?a {bamt}) ?b)", w, validate))
            for camt in sorted(set(amounts)):
                if 0 <= camt < w and bamt + camt < w:
                    rules.append(_rule(
                        f"shl{bamt}_shl{camt}", f"(arith_shli{s} (arith_shli{s} ?a {bamt}) {camt})",
                        f"(arith_shli{s} ?a {bamt + camt})", w, validate))
    return rules


def parse_rule(text: str) -> StaticRule:
    """Parse ``lhs <=> rhs : iN`` and validate soundness."""
    if "<=>" not in text or ":" not in text.rsplit(")", 1)[-1]:
        raise RuleSyntaxError(f"expected '(lhs) <=> (rhs) : iN' in {text!r}")
    lhs_text, rest = text.split("<=>", 1)
    rhs_text, width_text = rest.rsplit(":", 1)
    width_text = width_text.strip()
    if not width_text.startswith("i") or not width_text[1:].isdigit():
        raise RuleSyntaxError(f"bad width {width_text!r}")
    width = int(width_text[1:])
    try:
        lhs = parse_rule_side(lhs_text.strip(), width)
        rhs = parse_rule_side(rhs_text.strip(), width)
    except Exception as e:
        raise RuleSyntaxError(str(e)) from e
    rule = StaticRule(f"user_{zlib.crc32(text.encode()):08x}", lhs, rhs, width)
    validate_rule(rule)
    return rule


def load_rules_file(path) -> list:
    rules = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rules.append(parse_rule(line))
    return rules


def observed_widths(modules) -> set:
    """Bitwidths of integer ops appearing in the given modules."""
    from .ir import BinaryOp, ConstantOp, IntType, LoadOp, StoreOp, AffineForOp

    widths = set()

    def walk(ops):
        for op in ops:
            if isinstance(op, (BinaryOp, LoadOp, StoreOp)) and isinstance(op.type, IntType):
                widths.add(op.type.bitwidth)
            elif isinstance(op, ConstantOp) and isinstance(op.type, IntType):
                widths.add(op.type.bitwidth)
            elif isinstance(op, AffineForOp):
                walk(op.body)

    for m in modules:
        for f in m.functions:
            walk(f.body)
    return widths


def observed_shift_amounts(modules) -> set:
    """Constant shift amounts fed to shli/shrsi, for rule instantiation."""
    from .ir import AffineForOp, BinaryOp, ConstantOp

    amounts = set(range(0, 9))

    def walk(ops, consts):
        for op in ops:
            if isinstance(op, ConstantOp):
                consts[op.result] = op.value
            elif isinstance(op, BinaryOp) and op.op in ("shli", "shrsi"):
                if op.rhs in consts:
                    amounts.add(consts[op.rhs])
            elif isinstance(op, AffineForOp):
                walk(op.body, dict(consts))

    for m in modules:
        for f in m.functions:
            walk(f.body, {})
    return amounts
