"""Computation DAGs: construction, generators, validation and text serialization.

A computation is a DAG of unit tasks with dense node ids ``0..n-1``.  Every
edge ``u -> v`` means ``v`` may only run after ``u``.  Legal computations have
exactly one root (in-degree 0), exactly one sink (out-degree 0) and node
out-degree at most 2; executing a node can therefore make at most two new
nodes runnable.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ComputationDag:
    """Immutable task graph.

    ``edges[u]`` is the ordered tuple of successors of ``u``; the order is
    the order in which a simulator reports newly runnable successors.
    ``root``/``sink`` are best-effort picks (first in-degree-0 / first
    out-degree-0 node) so that malformed graphs can still be constructed and
    then rejected by :func:`validate`.
    """

    node_count: int
    edges: tuple[tuple[int, ...], ...]
    root: int
    sink: int
    pred_counts: tuple[int, ...]

    @staticmethod
    def from_edges(node_count: int, edge_list) -> "ComputationDag":
        """Build a dag from an iterable of ``(u, v)`` pairs.

        Raises ``ValueError`` for out-of-range indices or a non-positive
        node count; semantic problems (cycles, extra roots, fan-out > 2)
        are left to :func:`validate`.
        """
        if node_count < 1:
            raise ValueError(f"node_count must be >= 1, got {node_count}")
        succ: list[list[int]] = [[] for _ in range(node_count)]
        preds = [0] * node_count
        for u, v in edge_list:
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise ValueError(f"edge ({u}, {v}) out of range for {node_count} nodes")
            succ[u].append(v)
            preds[v] += 1
        root = next((i for i in range(node_count) if preds[i] == 0), -1)
        sink = next((i for i in range(node_count) if not succ[i]), -1)
        return ComputationDag(
            node_count=node_count,
            edges=tuple(tuple(s) for s in succ),
            root=root,
            sink=sink,
            pred_counts=tuple(preds),
        )

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.edges)

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        return f"ComputationDag(nodes={self.node_count}, edges={self.edge_count})"


def validate(dag: ComputationDag) -> list[str]:
    """Check the structural conventions; return a list of violations.

    An empty list means the dag is a legal computation.  Violations are
    data, not exceptions: generators are tested through this, and
    hand-written adversarial graphs should be reportable rather than fatal.
    """
    violations: list[str] = []
    n = dag.node_count
    roots = [i for i in range(n) if dag.pred_counts[i] == 0]
    sinks = [i for i in range(n) if not dag.edges[i]]
    if len(roots) == 0:
        violations.append("no root (every node has a predecessor)")
    elif len(roots) > 1:
        violations.append(f"multiple roots: {roots}")
    if len(sinks) == 0:
        violations.append("no sink (every node has a successor)")
    elif len(sinks) > 1:
        violations.append(f"multiple sinks: {sinks}")
    for u in range(n):
        if len(dag.edges[u]) > 2:
            violations.append(f"out-degree>2 at node {u} ({len(dag.edges[u])})")
        if len(set(dag.edges[u])) != len(dag.edges[u]):
            violations.append(f"duplicate edge out of node {u}")

    order = _topo_order(dag)
    if order is None:
        violations.append("cycle detected")
        return violations

    if len(roots) == 1:
        reach = _reachable_from(dag, roots[0])
        if len(reach) != n:
            missing = sorted(set(range(n)) - reach)[:5]
            violations.append(f"nodes unreachable from root: {missing}...")
    if len(sinks) == 1:
        coreach = _coreachable_to(dag, sinks[0])
        if len(coreach) != n:
            missing = sorted(set(range(n)) - coreach)[:5]
            violations.append(f"nodes that cannot reach the sink: {missing}...")
    return violations


def _topo_order(dag: ComputationDag) -> list[int] | None:
    """Kahn topological order, or None if the graph has a cycle."""
    preds = list(dag.pred_counts)
    stack = [i for i in range(dag.node_count) if preds[i] == 0]
    order = []
    while stack:
        u = stack.pop()
        order.append(u)
        for v in dag.edges[u]:
            preds[v] -= 1
            if preds[v] == 0:
                stack.append(v)
    return order if len(order) == dag.node_count else None


def _reachable_from(dag: ComputationDag, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in dag.edges[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _coreachable_to(dag: ComputationDag, target: int) -> set[int]:
    rev: list[list[int]] = [[] for _ in range(dag.node_count)]
    for u in range(dag.node_count):
        for v in dag.edges[u]:
            rev[v].append(u)
    seen = {target}
    stack = [target]
    while stack:
        u = stack.pop()
        for w in rev[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


# ---------------------------------------------------------------------------
# Generators


def gen_chain(n: int) -> ComputationDag:
    """Fully serial computation: ``0 -> 1 -> ... -> n-1``."""
    if n < 1:
        raise ValueError(f"chain length must be >= 1, got {n}")
    return ComputationDag.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def gen_comb(spine: int) -> ComputationDag:
    """Depth-first adversarial workload.

    A chain of ``spine`` nodes where every non-terminal spine node also
    hangs one leaf off the side, so whoever runs the spine makes two nodes
    runnable per step while everyone else sees mostly dead-end leaves.  The
    leaves plus the spine's end are folded pairwise by binary joins into a
    single sink.
    """
    if spine < 1:
        raise ValueError(f"spine length must be >= 1, got {spine}")
    edges: list[tuple[int, int]] = []
    # spine nodes 0..spine-1, leaf for spine node i is spine+i
    leaves = []
    for i in range(spine - 1):
        leaf = spine + i
        edges.append((i, i + 1))
        edges.append((i, leaf))
        leaves.append(leaf)
    next_id = 2 * spine - 1
    # fold the leaves and the spine end into one sink with binary joins
    frontier = leaves + [spine - 1]
    while len(frontier) > 1:
        merged = []
        for j in range(0, len(frontier) - 1, 2):
            join = next_id
            next_id += 1
            edges.append((frontier[j], join))
            edges.append((frontier[j + 1], join))
            merged.append(join)
        if len(frontier) % 2 == 1:
            merged.append(frontier[-1])
        frontier = merged
    return ComputationDag.from_edges(next_id, edges)


def gen_binary_tree(depth: int) -> ComputationDag:
    """Regular fork/join contrast workload.

    A complete binary out-tree of the given depth whose ``2**depth`` leaves
    are folded back by a mirrored binary reduction into a single sink.
    Total size is ``3 * 2**depth - 2``.
    """
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    edges: list[tuple[int, int]] = []
    level = [0]
    next_id = 1
    for _ in range(depth):
        nxt = []
        for u in level:
            a, b = next_id, next_id + 1
            next_id += 2
            edges.append((u, a))
            edges.append((u, b))
            nxt.extend((a, b))
        level = nxt
    while len(level) > 1:
        nxt = []
        for j in range(0, len(level), 2):
            join = next_id
            next_id += 1
            edges.append((level[j], join))
            edges.append((level[j + 1], join))
            nxt.append(join)
        level = nxt
    return ComputationDag.from_edges(next_id, edges)


@dataclass(frozen=True)
class DagSpec:
    """Generator request: which workload shape and how big.

    ``kind`` is one of ``chain``, ``comb``, ``binary_tree`` or ``file``
    (``path`` required, ``size`` ignored).
    """

    kind: str
    size: int = 1
    path: str | None = None

    KINDS = ("chain", "comb", "binary_tree", "file")

    def build(self) -> ComputationDag:
        if self.kind == "chain":
            return gen_chain(self.size)
        if self.kind == "comb":
            return gen_comb(self.size)
        if self.kind == "binary_tree":
            return gen_binary_tree(self.size)
        if self.kind == "file":
            if not self.path:
                raise ValueError("DagSpec(kind='file') requires a path")
            with open(self.path, "r", encoding="utf-8") as fh:
                return decode(fh.read())
        raise ValueError(f"unknown dag kind {self.kind!r} (expected one of {self.KINDS})")


# ---------------------------------------------------------------------------
# Text serialization
#
# line 1: "nodes <N>"; then one "<u> <v>" line per edge; '#' starts a comment
# line; UTF-8 with LF endings.


class DagParseError(ValueError):
    """Malformed dag text; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DagValidationError(ValueError):
    """Parsed dag breaks the structural conventions."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


def encode(dag: ComputationDag) -> str:
    lines = [f"nodes {dag.node_count}"]
    for u in range(dag.node_count):
        for v in dag.edges[u]:
            lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"


def decode(text: str, check: bool = True) -> ComputationDag:
    """Parse dag text; raises :class:`DagParseError` / :class:`DagValidationError`."""
    node_count = None
    edges: list[tuple[int, int]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if node_count is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "nodes":
                raise DagParseError(line_no, f"expected 'nodes <N>' header, got {line!r}")
            try:
                node_count = int(parts[1])
            except ValueError:
                raise DagParseError(line_no, f"bad node count {parts[1]!r}") from None
            if node_count < 1:
                raise DagParseError(line_no, f"node count must be >= 1, got {node_count}")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DagParseError(line_no, f"expected '<u> <v>' edge, got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DagParseError(line_no, f"non-integer edge endpoint in {line!r}") from None
        if not (0 <= u < node_count and 0 <= v < node_count):
            raise DagParseError(line_no, f"edge ({u}, {v}) out of range")
        edges.append((u, v))
    if node_count is None:
        raise DagParseError(1, "missing 'nodes <N>' header")
    dag = ComputationDag.from_edges(node_count, edges)
    if check:
        violations = validate(dag)
        if violations:
            raise DagValidationError(violations)
    return dag
