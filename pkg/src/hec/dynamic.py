"""Dynamic rewrite rules for control-flow transformations.

Candidate loop pairs/nests are detected across the two programs, their side
conditions discharged by an exact integer checker (normalization first, then
bounded exhaustive evaluation, then sampling), and instance-specific rules
emitted. Trip counts are clamped at zero: a loop whose upper bound falls at
or below its lower bound runs zero times, which is exactly the discipline
that exposes unroll boundary bugs.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from enum import Enum

from .affine import LinForm
from .errors import NonIntegralFactor
from .terms import Term, leaf, lin_to_term, substitute_atoms, term_to_lin

DEFAULT_SYMBOL_RANGE = (0, 1 << 16)
EXHAUSTIVE_LIMIT = 10**6
SAMPLE_COUNT = 10**4


class TransformKind(Enum):
    UNROLLING = "unrolling"
    TILING = "tiling"
    FUSION = "fusion"
    COALESCING = "coalescing"


@dataclass(frozen=True)
class LoopSignature:
    lower: LinForm
    upper: LinForm
    step: int
    iv: Term  # the loop's forvalue term (substitution atom)
    body: Term  # the loop body block term

    @property
    def iv_name(self):
        return self.iv.children[3].label


def signature_of(forcontrol: Term) -> LoopSignature:
    fv, body = forcontrol.children
    return LoopSignature(
        lower=term_to_lin(fv.children[0]),
        upper=term_to_lin(fv.children[1]),
        step=int(fv.children[2].label),
        iv=fv,
        body=body,
    )


@dataclass
class LoopInfo:
    term: Term  # the forcontrol term
    sig: LoopSignature
    side: str  # 'a' or 'b'
    block: Term  # parent block term
    slot: int  # child index within the parent block

    @property
    def inner(self):
        """The sole nested loop if this is a perfect 2-deep nest head."""
        kids = self.sig.body.children
        if len(kids) == 1 and kids[0].label == "forcontrol":
            return kids[0]
        return None


@dataclass
class Candidate:
    kind: TransformKind
    single: LoopInfo = None  # loop shaped like the merged form (other side)
    pair: tuple = None  # (main, tail) for unrolling; (first, second) for fusion
    coarse: LoopInfo = None  # tail-less unrolling: the replicated-body loop
    nest: tuple = None  # (outer, inner) LoopInfo/Term for tiling/coalescing
    flat: LoopInfo = None

    @property
    def key(self):
        parts = [self.kind.value]
        for info in (self.single, self.coarse, self.flat):
            parts.append(str(info.term) if info else "-")
        for tup in (self.pair, self.nest):
            parts.append("|".join(str(x.term if isinstance(x, LoopInfo) else x) for x in tup) if tup else "-")
        return tuple(parts)


@dataclass
class ConditionResult:
    status: str  # proven | refuted | unknown
    witness: dict = None  # printable atom name -> int, for refutations
    detail: dict = field(default_factory=dict)
    method: str = ""

    @property
    def proven(self):
        return self.status == "proven"

    @property
    def refuted(self):
        return self.status == "refuted"


@dataclass
class DynamicRule:
    name: str
    kind: TransformKind
    lhs: Term  # single merged-loop form
    rhs: Term  # (combine loop1 loop2) for pairwise kinds, else a loop term
    provenance: tuple
    condition: ConditionResult
    bidirectional: bool = True

    def __str__(self):
        return f"[{self.kind.value}] {self.lhs} <=> {self.rhs}"


# --- loop collection ---------------------------------------------------------


def collect_loops(root_block: Term, side: str):
    """All loops under a function block, with their parent block and slot."""
    out = []

    def walk(block):
        for slot, child in enumerate(block.children):
            if child.label == "forcontrol":
                info = LoopInfo(child, signature_of(child), side, block, slot)
                out.append(info)
                walk(child.children[1])
    walk(root_block)
    return out


def _roots_of(x):
    from .graph import DataflowGraph, graph_to_term

    if isinstance(x, DataflowGraph):
        return graph_to_term(x)
    if isinstance(x, Term):
        return {"": x}
    return dict(x)


def find_candidates(graph_a, graph_b, prior_keys=None):
    """Candidate transformations between two programs.

    Accepts DataflowGraphs, root Terms, or {function: Term} dicts; functions
    are matched by name. ``prior_keys`` suppresses candidates already handled
    in earlier runner iterations.
    """
    prior_keys = prior_keys or set()
    roots_a, roots_b = _roots_of(graph_a), _roots_of(graph_b)
    out = []
    for fname in roots_a:
        if fname not in roots_b:
            continue
        loops_a = collect_loops(roots_a[fname], "a")
        loops_b = collect_loops(roots_b[fname], "b")
        out.extend(_candidates_for(loops_a, loops_b))
    seen = set(prior_keys)
    unique = []
    for c in out:
        if c.key not in seen:
            seen.add(c.key)
            unique.append(c)
    return unique


def _adjacent_pairs(loops):
    by_block = {}
    for info in loops:
        by_block.setdefault(id(info.block), []).append(info)
    pairs = []
    for group in by_block.values():
        group.sort(key=lambda i: i.slot)
        for x, y in zip(group, group[1:]):
            if y.slot == x.slot + 1:
                pairs.append((x, y))
    return pairs


def _candidates_for(loops_a, loops_b):
    cands = []
    sides = {"a": loops_a, "b": loops_b}
    for side, loops in sides.items():
        others = sides["b" if side == "a" else "a"]
        for x, y in _adjacent_pairs(loops):
            # unrolling: main loop then tail loop, tail step divides main step
            if x.sig.step % y.sig.step == 0 and x.sig.step >= y.sig.step:
                singles = [o for o in others
                           if o.sig.lower == x.sig.lower and o.sig.upper == y.sig.upper
                           and o.sig.step == y.sig.step]
                if singles or len(loops) > len(others):
                    cands.append(Candidate(TransformKind.UNROLLING,
                                           single=singles[0] if singles else None,
                                           pair=(x, y)))
            # fusion: equal-bound adjacent pair vs a single fused loop
            if x.sig.lower == y.sig.lower and x.sig.upper == y.sig.upper:
                fused_step = x.sig.step * y.sig.step
                for o in others:
                    if (o.sig.lower == x.sig.lower and o.sig.upper == x.sig.upper
                            and o.sig.step == fused_step):
                        cands.append(Candidate(TransformKind.FUSION, single=o, pair=(x, y)))
                        break
    # tail-less unrolling: a coarse-step loop whose body replicates the other
    # side's fine-step loop body, with no remainder loop
    for la in loops_a:
        for lb in loops_b:
            if la.sig.lower != lb.sig.lower or la.sig.upper != lb.sig.upper:
                continue
            for coarse, fine in ((la, lb), (lb, la)):
                if (coarse.sig.step > fine.sig.step
                        and coarse.sig.step % fine.sig.step == 0):
                    cands.append(Candidate(TransformKind.UNROLLING,
                                           single=fine, coarse=coarse))
    for side, loops in sides.items():
        others = sides["b" if side == "a" else "a"]
        for x in loops:
            inner = x.inner
            if inner is None:
                continue
            isig = signature_of(inner)
            for o in others:
                # tiling: flat loop vs a perfect 2-deep nest
                if (o.sig.lower == x.sig.lower and o.sig.upper == x.sig.upper
                        and o.sig.step == isig.step and x.sig.step % max(isig.step, 1) == 0
                        and x.sig.step > isig.step):
                    cands.append(Candidate(TransformKind.TILING, nest=(x, inner), flat=o))
                # coalescing: constant-extent nest vs a flat floordiv/mod loop
                if (x.sig.lower.is_const() and x.sig.upper.is_const()
                        and isig.lower.is_const() and isig.upper.is_const()
                        and o.sig.lower.is_const() and o.sig.upper.is_const()
                        and x.sig.step == 1 and isig.step == 1 and o.sig.step == 1
                        and o.sig.lower.const == 0 and x.sig.lower.const == 0
                        and o.sig.upper.const == x.sig.upper.const * isig.upper.const):
                    cands.append(Candidate(TransformKind.COALESCING, nest=(x, inner), flat=o))
    return cands


# --- exact integer condition checking ----------------------------------------


def _ceildiv(a, b):
    return -(-a // b)


def trip_count(start, end, step):
    """Clamped trip count under inclusive-lower/exclusive-upper semantics."""
    return max(0, _ceildiv(end - start, step))


def _atom_name(atom):
    if isinstance(atom, Term) and atom.is_leaf:
        return atom.label
    return str(atom)


def atom_ranges(atoms, symbol_range):
    """Admissible value range per free atom. Loop-value atoms with constant
    bounds range over their own iteration interval."""
    ranges = {}
    for a in atoms:
        if isinstance(a, Term) and a.label == "forvalue":
            lo = term_to_lin(a.children[0])
            hi = term_to_lin(a.children[1])
            if lo.is_const() and hi.is_const():
                ranges[a] = (lo.const, max(hi.const, lo.const + 1))
                continue
        ranges[a] = symbol_range
    return ranges


def check_condition_symbolic(lhs: LinForm = None, rhs: LinForm = None, pred=None,
                             atoms=None, ranges=None, symbol_range=DEFAULT_SYMBOL_RANGE,
                             exhaustive_limit=EXHAUSTIVE_LIMIT, samples=SAMPLE_COUNT,
                             seed=0) -> ConditionResult:
    """Decide an identity over quasi-affine expressions.

    Proven by normalization when both sides normalize identically; else by
    exhaustive evaluation when the product of ranges is small enough; else
    sampled (a failing point refutes, all-pass yields Unknown).
    """
    if pred is None:
        assert lhs is not None and rhs is not None
        if lhs == rhs:
            return ConditionResult("proven", method="normalized",
                                   detail={"form": lhs.key()})
        atoms = lhs.base_atoms() | rhs.base_atoms()

        def pred(binding):
            a = lhs.eval(lambda at: binding[at])
            b = rhs.eval(lambda at: binding[at])
            return a == b, {"lhs": a, "rhs": b}

    atoms = sorted(atoms or (), key=_atom_name)
    ranges = dict(ranges or {})
    for a in atoms:
        ranges.setdefault(a, symbol_range)
    if not atoms:
        ok, detail = pred({})
        if ok:
            return ConditionResult("proven", method="exhaustive", detail=detail)
        return ConditionResult("refuted", witness={}, detail=detail, method="exhaustive")

    space = 1
    for a in atoms:
        lo, hi = ranges[a]
        space *= max(1, hi - lo)
    if space <= exhaustive_limit:
        first_detail = None
        for combo in itertools.product(*[range(*ranges[a]) for a in atoms]):
            binding = dict(zip(atoms, combo))
            ok, detail = pred(binding)
            if first_detail is None:
                first_detail = detail
            if not ok:
                return ConditionResult("refuted", witness=_printable(binding),
                                       detail=detail, method="exhaustive")
        return ConditionResult("proven", method="exhaustive", detail=first_detail or {})

    rng = random.Random(seed)
    points = []
    for a in atoms:
        lo, hi = ranges[a]
        corners = sorted({lo, lo + 1, min(lo + 7, hi - 1), hi - 1})
        points.append(corners)
    for combo in itertools.islice(itertools.product(*points), 4096):
        binding = dict(zip(atoms, combo))
        ok, detail = pred(binding)
        if not ok:
            return ConditionResult("refuted", witness=_printable(binding),
                                   detail=detail, method="sampled")
    for _ in range(samples):
        binding = {a: rng.randrange(*ranges[a]) for a in atoms}
        ok, detail = pred(binding)
        if not ok:
            return ConditionResult("refuted", witness=_printable(binding),
                                   detail=detail, method="sampled")
    return ConditionResult("unknown", method="sampled",
                           detail={"note": "no counterexample in sampled evaluation"})


def _printable(binding):
    return {_atom_name(a): v for a, v in binding.items()}


# --- the four transformation checks ------------------------------------------


def body_is_replication(body1: Term, body2: Term, factor: int, k2: int,
                        iv1: Term, iv2: Term) -> bool:
    """body1 == factor replications of body2 with the induction value shifted
    by j*k2 per replica (index expressions renormalized)."""
    if factor < 1:
        return False
    expected = []
    base = LinForm.atom(iv1)
    for j in range(factor):
        shifted = base + (j * k2)
        for child in body2.children:
            expected.append(substitute_atoms(child, {iv2: shifted}))
    return list(body1.children) == expected


def check_unrolling(m1: LinForm, n1: LinForm, k1: int, m2: LinForm, n2: LinForm, k2: int,
                    body1: Term, body2: Term, iv1: Term, iv2: Term,
                    symbol_range=DEFAULT_SYMBOL_RANGE, seed=0) -> ConditionResult:
    """Table-style unrolling condition: trip-count identity (clamped) plus
    body replication, plus a coverage-contiguity clause."""
    if k1 % k2 != 0:
        raise NonIntegralFactor(k1, k2)
    factor = k1 // k2
    if not body_is_replication(body1, body2, factor, k2, iv1, iv2):
        return ConditionResult("unknown", detail={"clause": "body_replication"})

    atoms = m1.base_atoms() | n1.base_atoms() | m2.base_atoms() | n2.base_atoms()
    ranges = atom_ranges(atoms, symbol_range)

    def pred(binding):
        val = lambda a: binding[a]
        vm1, vn1 = m1.eval(val), n1.eval(val)
        vm2, vn2 = m2.eval(val), n2.eval(val)
        total = trip_count(vm1, vn2, k2)
        tail = trip_count(vm2, vn2, k2)
        main = trip_count(vm1, vn1, k1)
        detail = {"lhs_trips": total, "tail_trips": tail, "main_trips": main,
                  "factor": factor}
        identity = total == tail + main * factor
        contiguous = tail == 0 or vm2 == vm1 + main * k1
        detail["identity"] = identity
        detail["contiguous"] = contiguous
        return identity and contiguous, detail

    result = check_condition_symbolic(pred=pred, atoms=atoms, ranges=ranges,
                                      symbol_range=symbol_range, seed=seed)
    result.detail.setdefault("factor", factor)
    return result


def check_tiling(outer: LoopSignature, inner: LoopSignature, flat: LoopSignature,
                 symbol_range=DEFAULT_SYMBOL_RANGE) -> ConditionResult:
    if outer.step % inner.step != 0 or outer.step < inner.step:
        return ConditionResult("refuted", witness={},
                               detail={"clause": "tiling_factor",
                                       "outer_step": outer.step, "inner_step": inner.step})
    f = outer.step // inner.step
    checks = [
        ("flat_step", flat.step == inner.step),
        ("flat_lower", flat.lower == outer.lower),
        ("flat_upper", flat.upper == outer.upper),
        ("inner_lower", inner.lower == LinForm.atom(outer.iv)),
    ]
    for clause, ok in checks:
        if not ok:
            return ConditionResult("refuted", witness={}, detail={"clause": clause})

    guarded = LinForm.min_of(LinForm.atom(outer.iv) + outer.step, flat.upper)
    if inner.upper != guarded:
        # Accept an unguarded bound only when the extent divides the tile step.
        if inner.upper == LinForm.atom(outer.iv) + outer.step:
            extent = flat.upper - flat.lower
            atoms = extent.base_atoms()

            def pred(binding):
                v = extent.eval(lambda a: binding[a])
                return v % outer.step == 0, {"extent": v, "tile": outer.step}

            sub = check_condition_symbolic(pred=pred, atoms=atoms,
                                           ranges=atom_ranges(atoms, symbol_range),
                                           symbol_range=symbol_range)
            if not sub.proven:
                sub.detail["clause"] = "inner_upper_divisibility"
                return sub
        else:
            return ConditionResult("refuted", witness={}, detail={"clause": "inner_upper"})

    body = substitute_atoms(inner.body, {inner.iv: LinForm.atom(flat.iv)})
    if body != flat.body:
        return ConditionResult("unknown", detail={"clause": "body"})
    return ConditionResult("proven", detail={"factor": f}, method="normalized")


def _collect_accesses(body: Term, iv: Term, scan_atom: Term):
    """(kind, memref, index LinForms) per access, normalized to scan_atom.
    Returns None when the body nests further loops (handled conservatively)."""
    accesses = []
    for t in body.walk():
        if t.label == "forcontrol" and t is not body:
            return None
        if t.label.startswith(("load_", "store_")):
            fanin = t.children[-1]
            mem = fanin.children[0].label
            idx = tuple(term_to_lin(c).substitute({iv: LinForm.atom(scan_atom)})
                        for c in fanin.children[1:])
            accesses.append(("store" if t.label.startswith("store_") else "load", mem, idx))
    return accesses


def _memrefs_with_stores(body: Term):
    loads, stores = set(), set()
    for t in body.walk():
        if t.label.startswith(("load_", "store_")):
            mem = t.children[-1].children[0].label
            (stores if t.label.startswith("store_") else loads).add(mem)
    return loads, stores


def raw_violation(body1: Term, body2: Term, iv1: Term = None, iv2: Term = None,
                  domain=None) -> bool:
    """Conservative cross-body dependence check for fusion.

    False (safe) only when every cross pair with a store is provably
    order-insensitive: identical injective index functions, index functions
    that can never collide (gcd/parity reasoning), or exhaustive absence of
    an ordered collision over a concrete iteration domain. Anything
    undecidable counts as a violation.
    """
    violated, _ = _raw_violation_detail(body1, body2, iv1, iv2, domain)
    return violated


def _free_iv(body: Term):
    bound = {t.children[0] for t in body.walk() if t.label == "forcontrol"}
    for t in body.walk():
        if t.label.startswith(("load_", "store_")):
            for c in t.children[-1].children[1:]:
                for a in term_to_lin(c).base_atoms():
                    if isinstance(a, Term) and a.label == "forvalue" and a not in bound:
                        return a
    return None


def _raw_violation_detail(body1, body2, iv1=None, iv2=None, domain=None):
    iv1 = iv1 or _free_iv(body1) or leaf("%__none_a")
    iv2 = iv2 or _free_iv(body2) or leaf("%__none_b")
    scan = leaf("%scan")
    acc1 = _collect_accesses(body1, iv1, scan)
    acc2 = _collect_accesses(body2, iv2, scan)
    if acc1 is None or acc2 is None:
        # nested or non-analyzable bodies: safe only with disjoint memrefs
        l1, s1 = _memrefs_with_stores(body1)
        l2, s2 = _memrefs_with_stores(body2)
        shared = (s1 & (l2 | s2)) | (s2 & (l1 | s1))
        return (bool(shared), {"clause": "nested_bodies", "shared": sorted(shared)})

    for kind1, mem1, idx1 in acc1:
        for kind2, mem2, idx2 in acc2:
            if mem1 != mem2 or (kind1 != "store" and kind2 != "store"):
                continue
            hit, info = _ordered_collision(idx1, idx2, scan, domain)
            if hit:
                info.update({"memref": mem1, "body1": kind1, "body2": kind2})
                return True, info
    return False, {}


def _ordered_collision(f, g, scan, domain):
    """Does f(u) == g(v) happen for iterations u > v of the shared domain?"""
    if len(f) != len(g):
        return True, {"clause": "rank_mismatch"}
    if f == g:
        if any(dim.coeff_of(scan) != 0 for dim in f):
            return False, {}  # identical injective accesses collide only at u == v
        if domain is not None and _domain_trips(domain) is not None and _domain_trips(domain) <= 1:
            return False, {}
        return True, {"clause": "loop_invariant_index"}
    for fd, gd in zip(f, g):
        a, b = fd.coeff_of(scan), gd.coeff_of(scan)
        h = fd.drop(scan) - gd.drop(scan)
        if not h.is_const():
            continue  # symbol parts differ; undecidable at this dim
        c = h.const
        if a == 0 and b == 0:
            if c != 0:
                return False, {}  # this dimension never collides
            continue
        if c % math.gcd(a, b) != 0:
            return False, {}  # no integer solutions at all
    free = set()
    for dim in list(f) + list(g):
        free |= dim.base_atoms()
    trips = _domain_trips(domain)
    if free <= {scan} and trips is not None and trips <= 2048:
        lo, _, step = domain
        seq = [lo.const + t * step for t in range(trips)]
        vals_f = {u: tuple(dim.eval(lambda at: u) for dim in f) for u in seq}
        vals_g = {v: tuple(dim.eval(lambda at: v) for dim in g) for v in seq}
        for ui, u in enumerate(seq):
            for v in seq[:ui]:
                if vals_f[u] == vals_g[v]:
                    return True, {"clause": "collision", "iter_body1": u, "iter_body2": v}
        return False, {}
    return True, {"clause": "undecided"}


def _domain_trips(domain):
    if domain is None:
        return None
    lo, hi, step = domain
    if lo.is_const() and hi.is_const():
        return trip_count(lo.const, hi.const, step)
    return None


def check_fusion(loop1: LoopSignature, loop2: LoopSignature, fused: LoopSignature,
                 symbol_range=DEFAULT_SYMBOL_RANGE) -> ConditionResult:
    if not (loop1.lower == loop2.lower == fused.lower
            and loop1.upper == loop2.upper == fused.upper):
        return ConditionResult("unknown", detail={"clause": "bounds"})
    k1, k2 = loop1.step, loop2.step
    if fused.step != k1 * k2:
        return ConditionResult("unknown", detail={"clause": "fused_step"})

    expected = []
    base = LinForm.atom(fused.iv)
    for j in range(k2):
        for child in loop1.body.children:
            expected.append(substitute_atoms(child, {loop1.iv: base + j * k1}))
    for j in range(k1):
        for child in loop2.body.children:
            expected.append(substitute_atoms(child, {loop2.iv: base + j * k2}))
    if list(fused.body.children) != expected:
        return ConditionResult("unknown", detail={"clause": "body_replication"})

    if k1 * k2 > 1:
        atoms = fused.lower.base_atoms() | fused.upper.base_atoms()

        def pred(binding):
            val = lambda a: binding[a]
            m, n = fused.lower.eval(val), fused.upper.eval(val)
            tf = trip_count(m, n, k1 * k2)
            ok = tf * k2 == trip_count(m, n, k1) and tf * k1 == trip_count(m, n, k2)
            return ok, {"fused_trips": tf}

        sub = check_condition_symbolic(pred=pred, atoms=atoms,
                                       ranges=atom_ranges(atoms, symbol_range),
                                       symbol_range=symbol_range)
        if not sub.proven:
            sub.detail["clause"] = "trip_compatibility"
            return sub

    if k1 == k2:
        domain = (loop1.lower, loop1.upper, k1)
        violated, info = _raw_violation_detail(loop1.body, loop2.body,
                                               loop1.iv, loop2.iv, domain)
    else:
        violated, info = True, {"clause": "unequal_steps_conservative"}
    if violated:
        info.setdefault("clause", "raw_violation")
        witness = {k: info[k] for k in ("iter_body1", "iter_body2") if k in info}
        return ConditionResult("refuted", witness=witness,
                               detail={"clause": "raw_violation", **info})
    return ConditionResult("proven", detail={"k1": k1, "k2": k2}, method="normalized")


def check_coalescing(nest, flat: LoopSignature,
                     symbol_range=DEFAULT_SYMBOL_RANGE) -> ConditionResult:
    outer, inner = nest
    if isinstance(outer, Term):
        outer = signature_of(outer)
    if isinstance(inner, Term):
        inner = signature_of(inner)
    if inner.step != 1 or outer.step != 1 or flat.step != 1:
        return ConditionResult("unknown", detail={"clause": "non_unit_step"})
    consts = [outer.lower, outer.upper, inner.lower, inner.upper, flat.lower, flat.upper]
    if not all(c.is_const() for c in consts):
        return ConditionResult("unknown", detail={"clause": "symbolic_bounds"})
    if outer.lower.const != 0 or inner.lower.const != 0 or flat.lower.const != 0:
        return ConditionResult("unknown", detail={"clause": "nonzero_lower"})
    n1, n2 = outer.upper.const, inner.upper.const
    if flat.upper.const != n1 * n2:
        return ConditionResult("refuted", witness={},
                               detail={"clause": "cardinality", "n1": n1, "n2": n2,
                                       "flat_upper": flat.upper.const})
    base = LinForm.atom(flat.iv)
    body = substitute_atoms(inner.body, {
        outer.iv: base.floordiv(n2),
        inner.iv: base.mod(n2),
    })
    if body != flat.body:
        return ConditionResult("unknown", detail={"clause": "body"})
    return ConditionResult("proven", detail={"n1": n1, "n2": n2}, method="normalized")


# --- rule synthesis -----------------------------------------------------------


def rename_loop(forcontrol: Term, new_name: str) -> Term:
    """Alpha-rename a loop's induction value, fixing body references."""
    fv, body = forcontrol.children
    lo, up, step, _ = fv.children
    fv2 = Term("forvalue", (lo, up, step, leaf(new_name)))
    if fv2 == fv:
        return forcontrol
    return Term("forcontrol", (fv2, substitute_atoms(body, {fv: LinForm.atom(fv2)})))


def loops_alpha_equal(fc1: Term, fc2: Term) -> bool:
    """Structural equality up to the induction variable's name."""
    return fc1 == rename_loop(fc2, fc1.children[0].children[3].label)


def _merged_loop(m1: LinForm, n2: LinForm, k2: int, body2: Term, iv2: Term,
                 name: str) -> Term:
    fv = Term("forvalue", (lin_to_term(m1), lin_to_term(n2), leaf(k2), leaf(name)))
    body = Term("block", tuple(substitute_atoms(c, {iv2: LinForm.atom(fv)})
                               for c in body2.children))
    return Term("forcontrol", (fv, body))


def generate_rule(candidate: Candidate, result: ConditionResult,
                  namer=None) -> DynamicRule:
    """Build the instance-specific bidirectional rule for a proven candidate.

    Pairwise kinds get ``merged-loop <=> (combine loop1 loop2)``; tiling and
    coalescing relate two existing single loops directly. When the synthesized
    merged loop alpha-matches a loop in the other program, it adopts that
    loop's induction name so the two unify by construction.
    """
    assert result.proven
    counter = getattr(generate_rule, "_counter", [0])
    generate_rule._counter = counter
    if namer is None:
        def namer():
            counter[0] += 1
            return f"%m{counter[0]}"

    kind = candidate.kind
    if kind == TransformKind.UNROLLING and candidate.pair is not None:
        main, tail = candidate.pair
        m1, n2, k2 = main.sig.lower, tail.sig.upper, tail.sig.step
        lhs = None
        if candidate.single is not None:
            trial = _merged_loop(m1, n2, k2, tail.sig.body, tail.sig.iv,
                                 candidate.single.sig.iv_name)
            if trial == candidate.single.term:
                lhs = trial
        if lhs is None:
            lhs = _merged_loop(m1, n2, k2, tail.sig.body, tail.sig.iv, namer())
        rhs = Term("combine", (main.term, tail.term))
        name = f"unroll_{main.sig.step}to{k2}"
    elif kind == TransformKind.UNROLLING:
        lhs, rhs = candidate.single.term, candidate.coarse.term
        name = f"unroll_notail_{candidate.coarse.sig.step}to{candidate.single.sig.step}"
    elif kind == TransformKind.FUSION:
        lhs = candidate.single.term
        rhs = Term("combine", (candidate.pair[0].term, candidate.pair[1].term))
        name = "fusion"
    elif kind == TransformKind.TILING:
        outer = candidate.nest[0]
        lhs, rhs = candidate.flat.term, outer.term
        name = f"tiling_f{result.detail.get('factor', '?')}"
    else:
        outer = candidate.nest[0]
        lhs, rhs = outer.term, candidate.flat.term
        name = "coalescing"
    return DynamicRule(name=name, kind=kind, lhs=lhs, rhs=rhs,
                       provenance=candidate.key, condition=result)


def check_candidate(candidate: Candidate, symbol_range=DEFAULT_SYMBOL_RANGE,
                    seed=0) -> ConditionResult:
    """Dispatch a candidate to its transformation check."""
    kind = candidate.kind
    if kind == TransformKind.UNROLLING:
        if candidate.pair is not None:
            main, tail = candidate.pair
            return check_unrolling(
                main.sig.lower, main.sig.upper, main.sig.step,
                tail.sig.lower, tail.sig.upper, tail.sig.step,
                main.sig.body, tail.sig.body, main.sig.iv, tail.sig.iv,
                symbol_range=symbol_range, seed=seed)
        coarse, fine = candidate.coarse.sig, candidate.single.sig
        return check_unrolling(
            coarse.lower, coarse.upper, coarse.step,
            coarse.upper, fine.upper, fine.step,
            coarse.body, fine.body, coarse.iv, fine.iv,
            symbol_range=symbol_range, seed=seed)
    if kind == TransformKind.TILING:
        outer, inner = candidate.nest
        return check_tiling(outer.sig, signature_of(inner), candidate.flat.sig,
                            symbol_range=symbol_range)
    if kind == TransformKind.FUSION:
        return check_fusion(candidate.pair[0].sig, candidate.pair[1].sig,
                            candidate.single.sig, symbol_range=symbol_range)
    outer, inner = candidate.nest
    return check_coalescing((outer.sig, signature_of(inner)), candidate.flat.sig,
                            symbol_range=symbol_range)
