"""End-to-end verification pipeline.

parse -> dataflow graphs -> shared e-graph -> static saturation -> iterative
dynamic-rule rounds (invert, detect candidates, discharge conditions, bind
candidate pairs with combine nodes, saturate the hybrid ruleset) -> verdict.
Pairs the engine cannot unify fall back to seeded differential testing:
a reproducible divergence refutes, otherwise the result is Unknown.

Equivalent is only ever reported when the two function roots share an
e-class; NotEquivalent only with an interpreter-confirmed witness.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .dynamic import (
    check_candidate,
    find_candidates,
    generate_rule,
)
from .egraph import EGraph, SaturationLimits, construct_from_graph
from .errors import FunctionMismatch, NonIntegralFactor
from .graph import build_graph, term_to_graph
from .interp import MemoryState, differential_test, run_stmt_term
from .ir import IndexType, IntType, MemRefType, ProgramModule
from .parser import parse_module
from .rules import default_ruleset, observed_shift_amounts, observed_widths
from .terms import Term, int_leaf_value, term_to_lin

EQUIVALENT = "equivalent"
NOT_EQUIVALENT = "not_equivalent"
UNKNOWN = "unknown"


@dataclass
class VerifyConfig:
    max_rounds: int = 10
    max_iterations: int = 30
    enode_limit: int = 1_000_000
    timeout: float = 600.0
    samples: int = 200
    seed: int = 0
    symbol_range: tuple = (0, 1 << 16)
    symbol_sample_cap: int = 64
    extent_default: int = 32
    extra_rules: tuple = ()
    gate_samples: int = 50
    explain: bool = False


@dataclass
class VerificationReport:
    verdict: str = UNKNOWN
    reason: str = ""
    iterations: int = 0  # dynamic rounds executed
    dynamic_rules: int = 0
    e_classes: int = 0
    e_nodes: int = 0
    wall_time_ms: float = 0.0
    witness: dict = None
    rule_log: list = field(default_factory=list)
    functions: dict = field(default_factory=dict)
    explain: list = field(default_factory=list)

    def to_json(self):
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "iterations": self.iterations,
            "dynamic_rules": self.dynamic_rules,
            "e_classes": self.e_classes,
            "e_nodes": self.e_nodes,
            "wall_time_ms": round(self.wall_time_ms, 3),
            "witness": self.witness,
            "rule_log": list(self.rule_log),
            "functions": {k: dict(v) for k, v in self.functions.items()},
        }


def insert_combine(egraph: EGraph, class_a: int, class_b: int) -> int:
    """A pseudo combine node binding two candidate loop classes."""
    return egraph.insert("combine", (class_a, class_b))


def graft_combines(egraph: EGraph) -> int:
    """Structural pass: wherever a block holds an adjacent pair of classes
    bound by a combine node, union the block with the variant in which the
    pair is replaced by the combine. Sequential composition of adjacent
    block entries is exactly what combine denotes, so this is sound by
    construction."""
    egraph.rebuild()
    combines = {}
    for cid, node in egraph.all_nodes():
        if node.label == "combine":
            key = (egraph.find(node.children[0]), egraph.find(node.children[1]))
            combines.setdefault(key, egraph.find(cid))
    if not combines:
        return 0
    merged = 0
    for cid, node in list(egraph.all_nodes()):
        if node.label != "block" or len(node.children) < 2:
            continue
        ch = [egraph.find(c) for c in node.children]
        for i in range(len(ch) - 1):
            key = (ch[i], ch[i + 1])
            if key in combines:
                variant = tuple(ch[:i] + [combines[key]] + ch[i + 2:])
                nid = egraph.insert("block", variant)
                if egraph.union(cid, nid):
                    merged += 1
    if merged:
        egraph.rebuild()
    return merged


_RULESET_CACHE = {}


def _static_rules(mod_a, mod_b, cfg):
    widths = observed_widths((mod_a, mod_b)) or {1}
    shifts = observed_shift_amounts((mod_a, mod_b))
    key = (tuple(sorted(widths)), tuple(sorted(shifts)))
    if key not in _RULESET_CACHE:
        _RULESET_CACHE[key] = default_ruleset(sorted(widths), shifts)
    return list(_RULESET_CACHE[key]) + list(cfg.extra_rules)


def _slice(module, fname):
    return ProgramModule(module.affine_maps, (module.function(fname),))


def _free_stmt_atoms(term: Term):
    """Free expression atoms of a statement term: memref leaves, symbol
    leaves, and loop values not bound by a forcontrol inside the term."""
    bound = {t.children[0] for t in term.walk() if t.label == "forcontrol"}
    memrefs, atoms = set(), set()
    for t in term.walk():
        if t.label == "fanin":
            memrefs.add(t.children[0].label)
            for c in t.children[1:]:
                atoms |= term_to_lin(c).base_atoms()
        elif t.label == "forvalue":
            atoms |= term_to_lin(t.children[0]).base_atoms()
            atoms |= term_to_lin(t.children[1]).base_atoms()
    free = set()
    for a in atoms:
        if a in bound:
            continue
        if isinstance(a, Term) and int_leaf_value(a) is not None:
            continue
        free.add(a)
    return memrefs, free


def gate_dynamic_rule(rule, memref_context, cfg: VerifyConfig) -> bool:
    """Differential sanity gate: execute both rule sides on random concrete
    states; any behavioral difference rejects the rule."""
    rng = random.Random(cfg.seed ^ 0x5EED)
    memrefs_l, free_l = _free_stmt_atoms(rule.lhs)
    memrefs_r, free_r = _free_stmt_atoms(rule.rhs)
    memrefs, free = memrefs_l | memrefs_r, free_l | free_r
    for _ in range(cfg.gate_samples):
        memory = MemoryState()
        for name in sorted(memrefs):
            shape, elem = memref_context.get(name, ((cfg.extent_default,), IntType(8)))
            vals = [rng.randrange(0, elem.mask + 1) for _ in range(_size(shape))]
            memory.add(name, shape, elem, vals)
        env = {}
        for a in sorted(free, key=str):
            if isinstance(a, Term) and a.label == "forvalue":
                lo = term_to_lin(a.children[0])
                hi = term_to_lin(a.children[1])
                lo_v = lo.const if lo.is_const() else 0
                hi_v = hi.const if hi.is_const() else lo_v + 8
                env[a] = rng.randrange(lo_v, max(hi_v, lo_v + 1))
            else:
                env[a] = rng.randrange(0, 16)
        try:
            out_l = run_stmt_term(rule.lhs, env, memory.clone())
            out_r = run_stmt_term(rule.rhs, env, memory.clone())
        except Exception:
            continue  # trapped sample: no signal either way
        if out_l.diff(out_r) is not None:
            return False
    return True


def _size(shape):
    n = 1
    for d in shape:
        n *= d
    return n


def iteration_fixpoint(egraph: EGraph, generate_round, rules, limits,
                       stop_when=None, max_rounds: int = 10):
    """Run dynamic-rule rounds until no new proven rules arise, the roots
    unify, or limits hit. Returns (rounds, per-round new-rule counts, status).

    ``generate_round(round_index)`` returns freshly proven rules (with any
    combine nodes already inserted); previously emitted rules stay active.
    """
    emitted = []
    counts = []
    status = "no-new-rules"
    rounds = 0
    for r in range(1, max_rounds + 1):
        if stop_when and stop_when():
            status = "unified"
            break
        new_rules = generate_round(r)
        if not new_rules:
            status = "no-new-rules"
            break
        emitted.extend(new_rules)
        counts.append(len(new_rules))
        rounds = r
        report = egraph.saturate(list(rules) + emitted, limits,
                                 structural_pass=graft_combines, stop_when=stop_when)
        if stop_when and stop_when():
            status = "unified"
            break
        if report.status in ("node_limit", "timeout"):
            status = "limits"
            break
    else:
        status = "limits"
    return rounds, counts, status


def _verify_function(mod_a, mod_b, fname, cfg, static_rules, deadline):
    t0 = time.monotonic()
    slice_a, slice_b = _slice(mod_a, fname), _slice(mod_b, fname)
    graph_a, graph_b = build_graph(slice_a), build_graph(slice_b)
    eg = EGraph()
    eg, roots_a, _ = construct_from_graph(graph_a, eg)
    eg, roots_b, _ = construct_from_graph(graph_b, eg)
    root_a, root_b = roots_a[fname], roots_b[fname]

    fa = slice_a.functions[0]
    memref_context = {}
    for pos, (_, type_) in enumerate(fa.args):
        if isinstance(type_, MemRefType):
            shape = tuple(cfg.extent_default if d is None else d for d in type_.shape)
            memref_context[f"%arg{pos}"] = (shape, type_.element)

    result = {
        "verdict": UNKNOWN, "reason": "", "rounds": 0, "dynamic_rules": 0,
        "rule_counts": [], "witness": None, "rule_log": [], "explain": [],
    }

    def unified():
        return eg.in_same_class(root_a, root_b)

    def limits_now():
        return SaturationLimits(
            max_iterations=cfg.max_iterations, max_enodes=cfg.enode_limit,
            wall_clock=max(0.1, deadline - time.monotonic()))

    static_report = eg.saturate(static_rules, limits_now(), stop_when=unified)
    for name, n in sorted(static_report.applied.items()):
        result["rule_log"].append({"phase": "static", "rule": name, "applications": n})

    refuted_witnesses = []
    emitted_rules = []
    prior_keys = set()
    merge_counter = [0]

    def namer():
        merge_counter[0] += 1
        return f"%m{merge_counter[0]}"

    def generate_round(round_index):
        terms_a = eg.extract(eg.find(root_a))
        terms_b = eg.extract(eg.find(root_b))
        inv_a = term_to_graph(terms_a, fname)
        inv_b = term_to_graph(terms_b, fname)
        candidates = find_candidates(inv_a, inv_b, prior_keys)
        fresh = []
        for cand in candidates:
            prior_keys.add(cand.key)
            try:
                cond = check_candidate(cand, symbol_range=cfg.symbol_range, seed=cfg.seed)
            except NonIntegralFactor:
                continue
            entry = {"round": round_index, "kind": cand.kind.value,
                     "status": cond.status, "detail": dict(cond.detail)}
            if cond.refuted:
                entry["witness"] = cond.witness
                if cond.witness:
                    refuted_witnesses.append(cond.witness)
            if cond.proven:
                rule = generate_rule(cand, cond, namer)
                if gate_dynamic_rule(rule, memref_context, cfg):
                    fresh.append(rule)
                    entry["rule"] = rule.name
                else:
                    entry["status"] = "gate_rejected"
            result["explain"].append(entry)
        for rule in fresh:
            result["rule_log"].append({"phase": "dynamic", "round": round_index,
                                       "rule": rule.name, "kind": rule.kind.value})
            if rule.rhs.label == "combine":
                a = eg.add_term(rule.rhs.children[0])
                b = eg.add_term(rule.rhs.children[1])
                insert_combine(eg, a, b)
        return fresh

    rounds, counts, status = 0, [], "unified"
    if not unified():
        rounds, counts, status = iteration_fixpoint(
            eg, generate_round, static_rules, limits_now(),
            stop_when=unified, max_rounds=cfg.max_rounds)

    result["rounds"] = rounds
    result["rule_counts"] = counts
    result["dynamic_rules"] = sum(counts)

    if unified():
        result["verdict"] = EQUIVALENT
        result["reason"] = "roots share an e-class"
    else:
        outcome = differential_test(
            slice_a, slice_b, samples=cfg.samples, seed=cfg.seed, function=fname,
            symbol_range=cfg.symbol_range, symbol_sample_cap=cfg.symbol_sample_cap,
            extent_default=cfg.extent_default, priority_symbols=refuted_witnesses)
        if outcome.counterexample is not None:
            result["verdict"] = NOT_EQUIVALENT
            result["reason"] = "differential testing found a divergence"
            result["witness"] = outcome.counterexample.to_json()
        elif outcome.trapped:
            result["verdict"] = UNKNOWN
            result["reason"] = "execution trapped on sampled inputs"
        else:
            result["verdict"] = UNKNOWN
            result["reason"] = f"not unified ({status}); no divergence in {outcome.samples_run} samples"

    result["e_classes"] = eg.num_classes()
    result["e_nodes"] = eg.num_nodes()
    result["wall_time_ms"] = (time.monotonic() - t0) * 1000.0
    return result


def verify_modules(mod_a: ProgramModule, mod_b: ProgramModule,
                   cfg: VerifyConfig = None) -> VerificationReport:
    cfg = cfg or VerifyConfig()
    t0 = time.monotonic()
    deadline = t0 + cfg.timeout
    names_a, names_b = set(mod_a.function_names()), set(mod_b.function_names())
    if names_a != names_b:
        raise FunctionMismatch(
            f"function names differ: {sorted(names_a)} vs {sorted(names_b)}")
    static_rules = _static_rules(mod_a, mod_b, cfg)
    report = VerificationReport(verdict=EQUIVALENT, reason="")
    for fname in sorted(names_a):
        fr = _verify_function(mod_a, mod_b, fname, cfg, static_rules, deadline)
        report.functions[fname] = fr
        report.iterations = max(report.iterations, fr["rounds"])
        report.dynamic_rules += fr["dynamic_rules"]
        report.e_classes += fr["e_classes"]
        report.e_nodes += fr["e_nodes"]
        report.rule_log.extend(fr["rule_log"])
        report.explain.extend(fr["explain"])
        if fr["verdict"] == NOT_EQUIVALENT and report.verdict != NOT_EQUIVALENT:
            report.verdict = NOT_EQUIVALENT
            report.reason = fr["reason"]
            report.witness = fr["witness"]
        elif fr["verdict"] == UNKNOWN and report.verdict == EQUIVALENT:
            report.verdict = UNKNOWN
            report.reason = fr["reason"]
    if report.verdict == EQUIVALENT:
        report.reason = "all function roots unified"
    report.wall_time_ms = (time.monotonic() - t0) * 1000.0
    return report


def verify(path_a, path_b, cfg: VerifyConfig = None) -> VerificationReport:
    with open(path_a, encoding="utf-8") as fh:
        mod_a = parse_module(fh.read())
    with open(path_b, encoding="utf-8") as fh:
        mod_b = parse_module(fh.read())
    return verify_modules(mod_a, mod_b, cfg)
