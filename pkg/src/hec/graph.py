"""Dataflow-graph representation of a parsed module.

Each operation becomes a vertex named ``Kind_index`` (index = appearance
order per function); every SSA value becomes a globally renamed edge. Loops
decompose into a loopvalue vertex (bounds, step, induction name) and a block
vertex whose inputs are exactly the isolated outputs of the loop body, in
source order. Stores gain a pseudo output edge so they stay tracked.

Terms: ``graph_to_term`` emits the parenthesized term per function root and
``term_to_graph`` inverts a term back into a graph. Graph isomorphism is
decided by comparing canonical forms, which are exactly the emitted terms
(index expressions are normalized on the way out, so hoisting and affine-map
spelling differences vanish).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .affine import Dim, LinForm, linearize
from .errors import CycleDetected, ScopeViolation
from .ir import (
    AffineForOp,
    ApplyOp,
    BinaryOp,
    ConstantOp,
    FuncDef,
    IndexType,
    IntType,
    LoadOp,
    MemRefType,
    ProgramModule,
    ReturnOp,
    StoreOp,
)
from .terms import Term, const_leaf, leaf, lin_to_term, term_to_lin

ARITH_KIND = {
    "addi": "Arith_Addi", "subi": "Arith_Subi", "muli": "Arith_Muli",
    "divsi": "Arith_Divsi", "andi": "Arith_Andi", "ori": "Arith_Ori",
    "xori": "Arith_Xori", "shli": "Arith_Shli", "shrsi": "Arith_Shrsi",
}


@dataclass
class Vertex:
    name: str
    kind: str
    dtype: str = "none"
    dimension: int = 0
    attrs: dict = field(default_factory=dict)
    input_edges: list = field(default_factory=list)
    output_edge: object = None

    def __repr__(self):
        return f"<Vertex {self.name}>"


@dataclass
class Edge:
    name: str
    source: Vertex
    targets: list = field(default_factory=list)

    def __repr__(self):
        return f"<Edge {self.name}>"


class DataflowGraph:
    def __init__(self):
        self.functions = {}  # name -> list[Vertex]
        self.roots = {}  # name -> block Vertex
        self.edges = {}  # func -> dict name -> Edge

    def vertices(self, func=None):
        if func is not None:
            return list(self.functions[func])
        return [v for vs in self.functions.values() for v in vs]


class _FuncBuilder:
    def __init__(self, graph, func_name):
        self.graph = graph
        self.func = func_name
        self.kind_counters = {}
        self.value_counter = 0
        self.loop_counter = 0
        self.pseudo_counter = 0
        graph.functions[func_name] = []
        graph.edges[func_name] = {}

    def new_vertex(self, kind, dtype="none", dimension=0, attrs=None):
        idx = self.kind_counters.get(kind, 0)
        self.kind_counters[kind] = idx + 1
        v = Vertex(f"{kind}_{idx}", kind, dtype, dimension, attrs or {})
        self.graph.functions[self.func].append(v)
        return v

    def new_edge(self, source, name=None):
        if name is None:
            name = f"%{self.value_counter}"
            self.value_counter += 1
        e = Edge(name, source)
        self.graph.edges[self.func][name] = e
        source.output_edge = e
        return e

    def connect(self, edge, target):
        edge.targets.append(target)
        target.input_edges.append(edge)


def isolated_outputs(scope_edges, block=None):
    """Edges not consumed by any operation within the scope (pseudo store
    outputs are never consumed, so they always qualify), in source order."""
    return [e for e in scope_edges if all(t is block for t in e.targets)]


def build_graph(module: ProgramModule) -> DataflowGraph:
    graph = DataflowGraph()
    for func in module.functions:
        _build_function(graph, func)
    return graph


def _build_function(graph, func: FuncDef):
    b = _FuncBuilder(graph, func.name)
    env = {}
    for pos, (name, type_) in enumerate(func.args):
        v = b.new_vertex("Argument", dtype=str(type_), attrs={"position": pos, "type": type_})
        env[name] = b.new_edge(v, f"%arg{pos}")

    def lookup(name):
        e = env.get(name)
        if e is None:
            raise ScopeViolation(name)
        return e

    def bound_forms(bound):
        operand_edges = [lookup(n) for n in bound.operands]
        forms = tuple(linearize(e, [Dim(i) for i in range(len(bound.operands))], ())
                      for e in bound.exprs)
        return forms, operand_edges

    def build_ops(ops):
        """Build vertices for a block scope; returns the scope's edges in
        definition order."""
        scope_edges = []
        for op in ops:
            if isinstance(op, ConstantOp):
                v = b.new_vertex("Arith_Constant", dtype=str(op.type),
                                 attrs={"value": op.value, "type": op.type})
                env[op.result] = b.new_edge(v)
                scope_edges.append(env[op.result])
            elif isinstance(op, BinaryOp):
                v = b.new_vertex(ARITH_KIND[op.op], dtype=str(op.type), attrs={"op": op.op})
                b.connect(lookup(op.lhs), v)
                b.connect(lookup(op.rhs), v)
                env[op.result] = b.new_edge(v)
                scope_edges.append(env[op.result])
            elif isinstance(op, ApplyOp):
                forms, operands = bound_forms(op.bound)
                v = b.new_vertex("Affine_Apply", dtype="index", attrs={"form": forms[0]})
                for e in operands:
                    b.connect(e, v)
                env[op.result] = b.new_edge(v)
                scope_edges.append(env[op.result])
            elif isinstance(op, (LoadOp, StoreOp)):
                forms, operands = bound_forms(op.indices)
                mem = lookup(op.memref)
                fanin = b.new_vertex("Fanin", attrs={"forms": forms})
                b.connect(mem, fanin)
                for e in operands:
                    b.connect(e, fanin)
                fanin_edge = b.new_edge(fanin)
                if isinstance(op, LoadOp):
                    v = b.new_vertex("Affine_Load", dtype=str(op.type), dimension=len(forms))
                    b.connect(fanin_edge, v)
                    env[op.result] = b.new_edge(v)
                    scope_edges.append(env[op.result])
                else:
                    v = b.new_vertex("Affine_Store", dtype=str(op.type), dimension=len(forms))
                    b.connect(lookup(op.value), v)
                    b.connect(fanin_edge, v)
                    pseudo = b.new_edge(v, f"pseudo_{b.pseudo_counter}")
                    b.pseudo_counter += 1
                    scope_edges.append(pseudo)
            elif isinstance(op, AffineForOp):
                term_name = f"%i{b.loop_counter}"
                b.loop_counter += 1
                lo_forms, lo_ops = bound_forms(op.lower)
                up_forms, up_ops = bound_forms(op.upper)
                nops = len(lo_ops)
                up_shifted = tuple(f.map_atoms(lambda a: Dim(a.position + nops))
                                   for f in up_forms)
                fv = b.new_vertex(
                    "ForValue", dtype="index",
                    attrs={"lower": lo_forms[0], "upper": up_shifted[0], "step": op.step,
                           "src_name": op.induction_var, "term_name": term_name})
                for e in lo_ops + up_ops:
                    b.connect(e, fv)
                iv_edge = b.new_edge(fv, term_name)
                saved = env.get(op.induction_var)
                env[op.induction_var] = iv_edge
                body_edges = build_ops(op.body)
                env[op.induction_var] = saved
                block_edge = _finish_block(b, body_edges)
                fc = b.new_vertex("ForControl")
                b.connect(iv_edge, fc)
                b.connect(block_edge, fc)
                scope_edges.append(b.new_edge(fc))
            elif isinstance(op, ReturnOp):
                pass
            else:
                raise TypeError(f"unknown op {op!r}")
        return scope_edges

    body_edges = build_ops(func.body)
    root_edge = _finish_block(b, body_edges)
    graph.roots[func.name] = root_edge.source


def _finish_block(b, scope_edges):
    block = b.new_vertex("Block")
    for e in isolated_outputs(scope_edges):
        b.connect(e, block)
    return b.new_edge(block)


# --- graph -> term ----------------------------------------------------------


def _positional_to_term_lin(form: LinForm, operand_terms):
    mapping = {Dim(i): term_to_lin(t) for i, t in enumerate(operand_terms)}
    return form.substitute(mapping)


def vertex_terms(graph: DataflowGraph, func: str) -> dict:
    """Memoized term per vertex, leaf-to-root. Raises CycleDetected."""
    memo = {}
    visiting = set()

    def edge_term(edge):
        return term_of(edge.source)

    def term_of(v):
        if v in memo:
            return memo[v]
        if id(v) in visiting:
            raise CycleDetected(v.name)
        visiting.add(id(v))
        k = v.kind
        if k == "Argument":
            t = leaf(f"%arg{v.attrs['position']}")
        elif k == "Arith_Constant":
            type_ = v.attrs.get("type")
            if isinstance(type_, IntType):
                t = const_leaf(v.attrs["value"], type_.bitwidth)
            else:
                t = leaf(v.attrs["value"])
        elif k in ("Affine_Apply", "Affine_Expr"):
            ins = [edge_term(e) for e in v.input_edges]
            t = lin_to_term(_positional_to_term_lin(v.attrs["form"], ins))
        elif k == "ForValue":
            ins = [edge_term(e) for e in v.input_edges]
            lo = lin_to_term(_positional_to_term_lin(v.attrs["lower"], ins))
            up = lin_to_term(_positional_to_term_lin(v.attrs["upper"], ins))
            t = Term("forvalue", (lo, up, leaf(v.attrs["step"]), leaf(v.attrs["term_name"])))
        elif k == "Fanin":
            mem = edge_term(v.input_edges[0])
            ins = [edge_term(e) for e in v.input_edges[1:]]
            idx = tuple(lin_to_term(_positional_to_term_lin(f, ins)) for f in v.attrs["forms"])
            t = Term("fanin", (mem,) + idx)
        elif k == "Affine_Load":
            t = Term(f"load_{v.dtype}", (edge_term(v.input_edges[0]),))
        elif k == "Affine_Store":
            t = Term(f"store_{v.dtype}",
                     (edge_term(v.input_edges[0]), edge_term(v.input_edges[1])))
        elif k == "Block":
            t = Term("block", tuple(edge_term(e) for e in v.input_edges))
        elif k == "ForControl":
            t = Term("forcontrol", (edge_term(v.input_edges[0]), edge_term(v.input_edges[1])))
        elif k == "Combine":
            t = Term("combine", tuple(edge_term(e) for e in v.input_edges))
        elif k == "Logic_Not":
            t = Term(f"not_{v.dtype}", (edge_term(v.input_edges[0]),))
        elif k in ARITH_KIND.values():
            op = v.attrs["op"]
            t = Term(f"arith_{op}_{v.dtype}",
                     (edge_term(v.input_edges[0]), edge_term(v.input_edges[1])))
        else:
            raise TypeError(f"cannot emit term for vertex kind {k}")
        visiting.discard(id(v))
        memo[v] = t
        return t

    for v in graph.functions[func]:
        term_of(v)
    return memo


def graph_to_term(graph: DataflowGraph) -> dict:
    """One root term per function."""
    out = {}
    for func, root in graph.roots.items():
        out[func] = vertex_terms(graph, func)[root]
    return out


def canonical_form(graph: DataflowGraph) -> dict:
    return {f: str(t) for f, t in graph_to_term(graph).items()}


# --- term -> graph (the inverter) -------------------------------------------


_TERM_KINDS = {"load": "Affine_Load", "store": "Affine_Store", "not": "Logic_Not"}


def term_to_graph(terms, func_name="main") -> DataflowGraph:
    """Invert root terms back into a dataflow graph."""
    if isinstance(terms, Term):
        terms = {func_name: terms}
    graph = DataflowGraph()
    for fname, root in terms.items():
        b = _FuncBuilder(graph, fname)
        memo = {}

        def edge_of(t, b=b, memo=memo):
            if t in memo:
                return memo[t]
            e = _build_term_vertex(t, b, edge_of)
            memo[t] = e
            return e

        root_edge = edge_of(root)
        graph.roots[fname] = root_edge.source
    return graph


def _expr_operands(lin: LinForm, edge_of):
    """Positional form + operand edges for a term-atom LinForm."""
    atoms = sorted(lin.base_atoms(), key=str)
    positions = {a: Dim(i) for i, a in enumerate(atoms)}
    return lin.map_atoms(lambda a: positions[a]), [edge_of(a) for a in atoms]


def _build_term_vertex(t: Term, b, edge_of):
    from .terms import EXPR_OPS, int_leaf_value

    if t.is_leaf:
        name = t.label
        if name.startswith("%arg"):
            v = b.new_vertex("Argument", dtype="?", attrs={"position": int(name[4:])})
            return b.new_edge(v, name)
        value = int_leaf_value(t)
        if value is None:
            raise ScopeViolation(name)
        if name in ("true", "false") or "_i" in name:
            width = 1 if name in ("true", "false") else int(name.split("_i")[1])
            type_ = IntType(width)
        else:
            type_ = IndexType()
        v = b.new_vertex("Arith_Constant", dtype=str(type_), attrs={"value": value, "type": type_})
        return b.new_edge(v)

    if t.label in EXPR_OPS:
        form, operands = _expr_operands(term_to_lin(t), edge_of)
        v = b.new_vertex("Affine_Expr", dtype="index", attrs={"form": form})
        for e in operands:
            b.connect(e, v)
        return b.new_edge(v)

    if t.label == "forvalue":
        lo, up, step, name = t.children
        lo_form, lo_ops = _expr_operands(term_to_lin(lo), edge_of)
        n = len(lo_ops)
        up_form, up_ops = _expr_operands(term_to_lin(up), edge_of)
        up_form = up_form.map_atoms(lambda a: Dim(a.position + n))
        v = b.new_vertex("ForValue", dtype="index",
                         attrs={"lower": lo_form, "upper": up_form,
                                "step": int(step.label), "src_name": name.label,
                                "term_name": name.label})
        for e in lo_ops + up_ops:
            b.connect(e, v)
        return b.new_edge(v)

    if t.label == "fanin":
        mem = edge_of(t.children[0])
        forms, operands = [], []
        for idx in t.children[1:]:
            form, ops = _expr_operands(term_to_lin(idx), edge_of)
            base = len(operands)
            forms.append(form.map_atoms(lambda a: Dim(a.position + base)))
            operands.extend(ops)
        v = b.new_vertex("Fanin", attrs={"forms": tuple(forms)})
        b.connect(mem, v)
        for e in operands:
            b.connect(e, v)
        return b.new_edge(v)

    if t.label == "block":
        v = b.new_vertex("Block")
        for c in t.children:
            b.connect(edge_of(c), v)
        return b.new_edge(v)

    if t.label == "forcontrol":
        v = b.new_vertex("ForControl")
        b.connect(edge_of(t.children[0]), v)
        b.connect(edge_of(t.children[1]), v)
        return b.new_edge(v)

    if t.label == "combine":
        v = b.new_vertex("Combine")
        for c in t.children:
            b.connect(edge_of(c), v)
        return b.new_edge(v)

    base, _, suffix = t.label.rpartition("_")
    if base.startswith("arith_"):
        short = base[len("arith_"):]
        v = b.new_vertex(ARITH_KIND[short], dtype=suffix, attrs={"op": short})
        for c in t.children:
            b.connect(edge_of(c), v)
        return b.new_edge(v)
    if base in _TERM_KINDS:
        kind = _TERM_KINDS[base]
        dim = len(t.children[-1].children) - 1 if base in ("load", "store") else 0
        v = b.new_vertex(kind, dtype=suffix, dimension=dim)
        for c in t.children:
            b.connect(edge_of(c), v)
        if base == "store":
            e = b.new_edge(v, f"pseudo_{b.pseudo_counter}")
            b.pseudo_counter += 1
            return e
        return b.new_edge(v)
    raise TypeError(f"cannot build vertex for term label {t.label}")


# --- reporting --------------------------------------------------------------


def describe(graph: DataflowGraph) -> str:
    """Listing-style vertex/edge report."""
    out = []
    for func, vertices in graph.functions.items():
        out.append(f"Function: {func}")
        for v in vertices:
            out.append(f"Vertex Name: {v.name}")
            out.append(f"Dtype: {v.dtype}")
            out.append(f"Dimension: {v.dimension}")
            out.append("Input Edges: " + ", ".join(e.name for e in v.input_edges))
            out.append("Output Edges: " + (v.output_edge.name if v.output_edge else ""))
            out.append("")
        for e in graph.edges[func].values():
            out.append(f"Edge Name: {e.name}")
            out.append(f"Source Vertex: {e.source.name}")
            out.append("Target Vertices: " + ", ".join(t.name for t in e.targets))
            out.append("")
    return "\n".join(out)


def to_dot(graph: DataflowGraph) -> str:
    lines = ["digraph dataflow {", "  node [shape=box];"]
    for func, vertices in graph.functions.items():
        ids = {id(v): f"{func}_{i}" for i, v in enumerate(vertices)}
        for v in vertices:
            label = v.name if v.dtype in ("none", "?") else f"{v.name}\\n{v.dtype}"
            lines.append(f'  {ids[id(v)]} [label="{label}"];')
        for e in graph.edges[func].values():
            for t in e.targets:
                lines.append(f'  {ids[id(e.source)]} -> {ids[id(t)]} [label="{e.name}"];')
    lines.append("}")
    return "\n".join(lines)
