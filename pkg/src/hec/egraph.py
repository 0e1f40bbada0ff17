"""E-graph engine: hashconsed e-nodes, union-find over e-classes,
congruence-closure rebuilding, e-matching, and the saturation scheduler.

Rebuilding is deferred: unions mark classes dirty and a worklist restores
congruence afterwards. Saturation applies every rule to all matches found
against a frozen snapshot per iteration, so the result is independent of
rule order.
"""

from __future__ import annotations

import time
from collections import namedtuple
from dataclasses import dataclass, field

from .errors import ArityMismatch
from .terms import Term

ENode = namedtuple("ENode", ["label", "children"])

# Fixed arities; labels not listed are variadic.
_ARITY = {
    "forcontrol": 2, "forvalue": 4, "combine": 2,
    "add": 2, "mul": 2, "floordiv": 2, "mod": 2, "min": 2, "max": 2,
}


def _label_arity(label):
    if label in _ARITY:
        return _ARITY[label]
    if label.startswith(("arith_", "load_")):
        return 1 if label.startswith("load_") else 2
    if label.startswith("store_"):
        return 2
    if label.startswith("not_"):
        return 1
    return None


class EClass:
    __slots__ = ("nodes", "parents")

    def __init__(self):
        self.nodes = []
        self.parents = []


@dataclass
class SaturationLimits:
    max_iterations: int = 30
    max_enodes: int = 1_000_000
    wall_clock: float = 600.0

    def __post_init__(self):
        if self.max_iterations <= 0 or self.max_enodes <= 0 or self.wall_clock <= 0:
            raise ValueError("saturation limits must be positive")


@dataclass
class SaturationReport:
    iterations: int = 0
    status: str = "saturated"  # saturated | iteration_limit | node_limit | timeout | stopped
    merges: int = 0
    applied: dict = field(default_factory=dict)  # rule name -> effective unions


class EGraph:
    def __init__(self):
        self._uf = []
        self.classes = {}  # canonical id -> EClass
        self.hashcons = {}  # canonical ENode -> class id
        self._dirty = []
        self.merges = 0  # total effective unions, ever

    # -- union-find

    def find(self, a: int) -> int:
        while self._uf[a] != a:
            self._uf[a] = self._uf[self._uf[a]]
            a = self._uf[a]
        return a

    def _fresh(self) -> int:
        cid = len(self._uf)
        self._uf.append(cid)
        self.classes[cid] = EClass()
        return cid

    # -- construction

    def insert(self, label: str, children=()) -> int:
        arity = _label_arity(label)
        if arity is not None and len(children) != arity:
            raise ArityMismatch(label, arity, len(children))
        node = ENode(label, tuple(self.find(c) for c in children))
        if node in self.hashcons:
            return self.find(self.hashcons[node])
        cid = self._fresh()
        self.classes[cid].nodes.append(node)
        self.hashcons[node] = cid
        for ch in set(node.children):
            self.classes[ch].parents.append((node, cid))
        return cid

    def add_term(self, term: Term) -> int:
        return self.insert(term.label, tuple(self.add_term(c) for c in term.children))

    def union(self, a: int, b: int) -> bool:
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if len(self.classes[a].parents) < len(self.classes[b].parents):
            a, b = b, a
        self._uf[b] = a
        cb = self.classes.pop(b)
        ca = self.classes[a]
        ca.nodes.extend(cb.nodes)
        ca.parents.extend(cb.parents)
        self._dirty.append(a)
        self.merges += 1
        return True

    def rebuild(self):
        while self._dirty:
            todo = {self.find(c) for c in self._dirty}
            self._dirty = []
            for cid in todo:
                self._repair(self.find(cid))

    def _canonical(self, node: ENode) -> ENode:
        return ENode(node.label, tuple(self.find(c) for c in node.children))

    def _repair(self, cid):
        cls = self.classes.get(cid)
        if cls is None:
            return
        new_parents = []
        seen = {}
        for pnode, pcid in cls.parents:
            self.hashcons.pop(pnode, None)
            canon = self._canonical(pnode)
            pcid = self.find(pcid)
            if canon in seen:
                self.union(seen[canon], pcid)
                pcid = self.find(pcid)
            else:
                existing = self.hashcons.get(canon)
                if existing is not None and self.find(existing) != pcid:
                    self.union(existing, pcid)
                    pcid = self.find(pcid)
            self.hashcons[canon] = pcid
            if canon not in seen:
                seen[canon] = pcid
                new_parents.append((canon, pcid))
        cls.parents = new_parents
        new_nodes, node_seen = [], set()
        for n in cls.nodes:
            cn = self._canonical(n)
            if cn not in node_seen:
                node_seen.add(cn)
                new_nodes.append(cn)
        cls.nodes = new_nodes

    # -- queries

    def in_same_class(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def num_classes(self) -> int:
        return len(self.classes)

    def num_nodes(self) -> int:
        return len(self.hashcons)

    def all_nodes(self):
        """(class id, node) pairs over a canonical snapshot, sorted."""
        for cid in sorted(self.classes):
            for node in self.classes[cid].nodes:
                yield cid, node

    def class_of_term(self, term: Term):
        """The class holding ``term``, or None (does not grow the graph)."""
        node = ENode(term.label, ())
        if not term.is_leaf:
            children = []
            for c in term.children:
                ch = self.class_of_term(c)
                if ch is None:
                    return None
                children.append(ch)
            node = ENode(term.label, tuple(children))
        cid = self.hashcons.get(self._canonical(node))
        return None if cid is None else self.find(cid)

    # -- e-matching

    def ematch(self, pattern: Term):
        """All (root class, substitution) pairs the pattern matches."""
        self.rebuild()
        if pattern.is_var:
            return [(cid, {pattern.label: cid}) for cid in sorted(self.classes)]
        out = []
        seen = set()
        for cid, node in list(self.all_nodes()):
            if node.label != pattern.label or len(node.children) != len(pattern.children):
                continue
            for subst in self._match_node(pattern, node, {}):
                key = (cid, tuple(sorted(subst.items())))
                if key not in seen:
                    seen.add(key)
                    out.append((cid, subst))
        return out

    def _match_class(self, pat: Term, cid: int, subst: dict):
        cid = self.find(cid)
        if pat.is_var:
            bound = subst.get(pat.label)
            if bound is None:
                s2 = dict(subst)
                s2[pat.label] = cid
                yield s2
            elif self.find(bound) == cid:
                yield subst
            return
        for node in list(self.classes[cid].nodes):
            if node.label == pat.label and len(node.children) == len(pat.children):
                yield from self._match_node(pat, node, subst)

    def _match_node(self, pat: Term, node: ENode, subst: dict):
        substs = [subst]
        for p, c in zip(pat.children, node.children):
            substs = [s2 for s in substs for s2 in self._match_class(p, c, s)]
            if not substs:
                return
        yield from substs

    def instantiate(self, term: Term, subst: dict) -> int:
        if term.is_var:
            return self.find(subst[term.label])
        return self.insert(term.label, tuple(self.instantiate(c, subst) for c in term.children))

    # -- saturation

    def saturate(self, rules, limits=None, structural_pass=None, stop_when=None) -> SaturationReport:
        limits = limits or SaturationLimits()
        report = SaturationReport()
        deadline = time.monotonic() + limits.wall_clock
        self.rebuild()
        if stop_when and stop_when():
            report.status = "stopped"
            return report
        for it in range(limits.max_iterations):
            report.iterations = it + 1
            pending = []
            for rule in rules:
                for pat, rhs in _directions(rule):
                    if pat.is_leaf and pat.is_var:
                        continue  # bare-variable patterns are vacuous generators
                    for cid, subst in self.ematch(pat):
                        pending.append((rule.name, rhs, cid, subst))
            merged = 0
            for name, rhs, cid, subst in pending:
                nid = self.instantiate(rhs, subst)
                if self.union(cid, nid):
                    merged += 1
                    report.applied[name] = report.applied.get(name, 0) + 1
            if structural_pass is not None:
                merged += structural_pass(self)
            self.rebuild()
            report.merges += merged
            if stop_when and stop_when():
                report.status = "stopped"
                return report
            if merged == 0:
                report.status = "saturated"
                return report
            if self.num_nodes() > limits.max_enodes:
                report.status = "node_limit"
                return report
            if time.monotonic() > deadline:
                report.status = "timeout"
                return report
        report.status = "iteration_limit"
        return report

    # -- extraction (the inverter's first half)

    def extract(self, cid: int) -> Term:
        """Smallest term representing the class; deterministic tie-breaks."""
        self.rebuild()
        cid = self.find(cid)
        best = {}  # class -> (cost, node)
        changed = True
        while changed:
            changed = False
            for c in sorted(self.classes):
                for node in self.classes[c].nodes:
                    cost = 1
                    ok = True
                    for ch in node.children:
                        e = best.get(self.find(ch))
                        if e is None:
                            ok = False
                            break
                        cost += e[0]
                    if not ok:
                        continue
                    cur = best.get(c)
                    key = (cost, node.label, node.children)
                    if cur is None or key < (cur[0], cur[1].label, cur[1].children):
                        best[c] = (cost, node)
                        changed = True
        memo = {}

        def build(c):
            c = self.find(c)
            if c in memo:
                return memo[c]
            node = best[c][1]
            t = Term(node.label, tuple(build(ch) for ch in node.children))
            memo[c] = t
            return t

        if cid not in best:
            raise KeyError(f"class {cid} has no finite representative")
        return build(cid)

    def to_dot(self) -> str:
        """Classes as dotted boxes, e-nodes as records."""
        self.rebuild()
        lines = ["digraph egraph {", "  compound=true;", "  node [shape=record];"]
        anchors = {}
        for cid in sorted(self.classes):
            lines.append(f"  subgraph cluster_{cid} {{")
            lines.append('    style=dotted; label="e-class %d";' % cid)
            for i, node in enumerate(self.classes[cid].nodes):
                nid = f"n{cid}_{i}"
                if i == 0:
                    anchors[cid] = nid
                label = node.label.replace("%", "\\%")
                lines.append(f'    {nid} [label="{label}"];')
            lines.append("  }")
        for cid in sorted(self.classes):
            for i, node in enumerate(self.classes[cid].nodes):
                for ch in node.children:
                    ch = self.find(ch)
                    lines.append(f"  n{cid}_{i} -> {anchors[ch]} [lhead=cluster_{ch}];")
        lines.append("}")
        return "\n".join(lines)


def _directions(rule):
    yield rule.lhs, rule.rhs
    if getattr(rule, "bidirectional", True):
        yield rule.rhs, rule.lhs


def construct_from_graph(graph, egraph: EGraph | None = None):
    """Insert a dataflow graph leaf-to-root; returns (egraph, roots, vmap).

    ``roots`` maps function name to the class of its function block; ``vmap``
    assigns one class per vertex, following a topological insertion order.
    """
    from .graph import vertex_terms

    eg = egraph or EGraph()
    vmap = {}
    roots = {}
    for func in graph.functions:
        terms = vertex_terms(graph, func)  # raises CycleDetected if cyclic
        for v in graph.functions[func]:
            vmap[v] = eg.add_term(terms[v])
        roots[func] = vmap[graph.roots[func]]
    return eg, roots, vmap
