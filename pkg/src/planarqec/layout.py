"""Direction labels for HGP Tanner graphs and planar layer decompositions."""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np

from planarqec.codes import BipartiteGraph, CssCode
from planarqec.coloring import bipartite_edge_coloring

log = logging.getLogger(__name__)


class StrategyError(RuntimeError):
    """A decomposition strategy needed more layers than the degree bound allows."""


@dataclass(frozen=True)
class VertexOrdering:
    """Cyclic labels ``0..|V|-1``; ``labels[v]`` is the label of vertex ``v``."""

    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        if sorted(labels) != list(range(len(labels))):
            raise ValueError("ordering must be a bijection onto 0..|V|-1")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def identity(cls, size: int) -> VertexOrdering:
        return cls(tuple(range(size)))

    def __len__(self) -> int:
        return len(self.labels)


def cycle_ordering(g: BipartiteGraph) -> VertexOrdering:
    """Labels consecutive along the cycle for a :func:`~planarqec.codes.cycle_graph`."""
    d = g.n_bits
    labels = [0] * g.n_vertices
    for i in range(d):
        labels[i] = 2 * i
        labels[d + i] = 2 * i + 1
    return VertexOrdering(tuple(labels))


@dataclass(frozen=True)
class BalanceReport:
    plus: tuple[int, ...]
    minus: tuple[int, ...]
    defect: tuple[int, ...]

    @property
    def total_defect(self) -> int:
        return sum(self.defect)

    @property
    def balanced(self) -> bool:
        return self.total_defect == 0


def _is_forward(offset: int, size: int) -> bool:
    return 0 < offset <= size / 2


def direction_excess(g: BipartiteGraph, order: VertexOrdering) -> int:
    """``sum_v max(d+(v), d-(v)) - ceil(deg(v) / 2)``."""
    rep = balance_report(g, order)
    return sum(max(a, b) - (a + b + 1) // 2 for a, b in zip(rep.plus, rep.minus))


def balance_report(g: BipartiteGraph, order: VertexOrdering) -> BalanceReport:
    """Per-vertex forward/backward neighbour counts under a cyclic labelling.

    A neighbour ``w`` of ``v`` is forward when ``labels[w] - labels[v]`` taken
    modulo ``|V|`` lies in ``(0, |V|/2]``.
    """
    if len(order) != g.n_vertices:
        raise ValueError("ordering does not cover the graph")
    size = g.n_vertices
    lab = order.labels
    plus, minus, defect = [], [], []
    for v, nbrs in enumerate(g.adjacency):
        dp = sum(_is_forward((lab[w] - lab[v]) % size, size) for w in nbrs)
        dm = len(nbrs) - dp
        plus.append(dp)
        minus.append(dm)
        defect.append(abs(dp - dm - len(nbrs) % 2))
    return BalanceReport(tuple(plus), tuple(minus), tuple(defect))


def _antipodal_edges(g: BipartiteGraph, lab: Sequence[int]) -> int:
    size = g.n_vertices
    if size % 2:
        return 0
    return sum((lab[u] - lab[v]) % size == size // 2 for u, v in g.vertex_edges())


@dataclass(frozen=True)
class OrderingResult:
    ordering: VertexOrdering
    defect: int
    antipodal: int
    seed: int
    iterations: int
    energy: float


def find_balanced_ordering(
    g: BipartiteGraph,
    seed: int = 0,
    budget: int = 100_000,
    t0: float = 2.0,
    cooling: float = 0.9995,
    restarts: int = 1,
    avoid_antipodal: bool = False,
    objective: str = "defect",
) -> OrderingResult:
    """Metropolis search over label swaps for a balanced cyclic ordering.

    With ``objective="defect"`` the energy is the total balance defect. With
    ``"excess"`` it is ``sum_v max(d+(v), d-(v)) - ceil(deg(v)/2)``, which is
    zero exactly when every directional Tanner subgraph reaches its minimum
    degree; odd-degree vertices may then lean either way. ``avoid_antipodal``
    adds the number of edges whose endpoints sit at antipodal labels.

    A swap that does not raise the energy is always taken; otherwise it is
    taken with probability ``exp(-delta / T)`` with ``T`` shrinking
    geometrically from ``t0``. Restarts use seeds ``seed, seed + 1, ...``; the
    lowest energy wins, then the lowest seed.
    """
    if objective not in ("defect", "excess"):
        raise ValueError(f"unknown objective {objective!r}")
    best: OrderingResult | None = None
    for r in range(restarts):
        res = _metropolis(g, seed + r, budget, t0, cooling, avoid_antipodal, objective)
        if best is None or (res.energy, res.seed) < (best.energy, best.seed):
            best = res
    return best


def _metropolis(g, seed, budget, t0, cooling, avoid_antipodal, objective) -> OrderingResult:
    size = g.n_vertices
    adj = g.adjacency
    rng = np.random.default_rng(seed)
    lab = list(range(size)) if size < 2 else rng.permutation(size).tolist()
    half = size // 2 if (size % 2 == 0 and avoid_antipodal) else None

    def vertex_energy(v):
        dp = 0
        anti = 0
        for w in adj[v]:
            off = (lab[w] - lab[v]) % size
            dp += 0 < off <= size / 2
            anti += off == half
        deg = len(adj[v])
        # each antipodal edge is seen from both endpoints
        if objective == "excess":
            return max(dp, deg - dp) - (deg + 1) // 2 + anti / 2
        return abs(2 * dp - deg - deg % 2) + anti / 2

    energies = [vertex_energy(v) for v in range(size)]
    energy = sum(energies)
    best_energy, best_lab = energy, lab[:]
    temp = t0
    it = 0
    for it in range(budget):
        if best_energy == 0 or size < 2:
            break
        u, v = rng.choice(size, 2, replace=False)
        touched = {int(u), int(v), *adj[u], *adj[v]}
        before = sum(energies[x] for x in touched)
        lab[u], lab[v] = lab[v], lab[u]
        new = {x: vertex_energy(x) for x in touched}
        delta = sum(new.values()) - before
        if delta <= 0 or rng.random() < math.exp(-delta / max(temp, 1e-12)):
            for x, e in new.items():
                energies[x] = e
            energy += delta
            if energy < best_energy - 1e-9:
                best_energy, best_lab = energy, lab[:]
        else:
            lab[u], lab[v] = lab[v], lab[u]
        temp *= cooling
    order = VertexOrdering(tuple(best_lab))
    return OrderingResult(
        order, balance_report(g, order).total_defect, _antipodal_edges(g, best_lab), seed, it,
        best_energy,
    )


class Direction(str, enum.Enum):
    E = "E"
    N = "N"
    S = "S"
    W = "W"


CARDINAL_ORDER = (Direction.E, Direction.N, Direction.S, Direction.W)


@dataclass(frozen=True)
class TannerEdge:
    kind: str  # "X" or "Z" stabilizer
    stab: int
    qubit: int
    direction: Direction

    @property
    def stab_node(self) -> tuple[str, int]:
        return (self.kind, self.stab)


@dataclass(frozen=True, eq=False)
class DirectedTanner:
    code: CssCode
    edges: tuple[TannerEdge, ...]

    @cached_property
    def subgraphs(self) -> dict[Direction, tuple[TannerEdge, ...]]:
        out: dict[Direction, list[TannerEdge]] = {d: [] for d in CARDINAL_ORDER}
        for e in self.edges:
            out[e.direction].append(e)
        return {d: tuple(v) for d, v in out.items()}

    def degree(self, d: Direction) -> int:
        return _max_degree((e.stab_node, e.qubit) for e in self.subgraphs[d])

    @property
    def degrees(self) -> dict[Direction, int]:
        return {d: self.degree(d) for d in CARDINAL_ORDER}

    @property
    def degree_sum(self) -> int:
        return sum(self.degrees.values())

    @property
    def tanner_degree(self) -> int:
        return _max_degree((e.stab_node, e.qubit) for e in self.edges)


def _max_degree(edges: Iterable[tuple[Hashable, Hashable]]) -> int:
    deg: dict[Hashable, int] = {}
    for u, v in edges:
        deg[("s", u)] = deg.get(("s", u), 0) + 1
        deg[("q", v)] = deg.get(("q", v), 0) + 1
    return max(deg.values(), default=0)


def assign_directions(code: CssCode, ord1: VertexOrdering, ord2: VertexOrdering) -> DirectedTanner:
    """Label every Tanner edge of an HGP code with a cardinal direction.

    Horizontal edges (first coordinate changes) get E when the label offset
    modulo ``|V1|`` is in ``(0, |V1|/2]`` and W otherwise; vertical edges get
    N/S the same way modulo ``|V2|``. For an exactly antipodal horizontal
    offset, X stabilizers take E and Z stabilizers take W, which keeps the
    X/Z overlap pairs in a consistent order for the cardinal circuit.
    """
    if code.seed_graphs is None:
        raise ValueError("direction labels need an HGP code with seed graphs")
    g1, g2 = code.seed_graphs
    if len(ord1) != g1.n_vertices or len(ord2) != g2.n_vertices:
        raise ValueError("orderings do not match the seed graphs")
    n1, n2 = g1.n_vertices, g2.n_vertices
    l1, l2 = ord1.labels, ord2.labels
    out = []
    for kind, h, labels in (("X", code.hx, code.xstab_labels), ("Z", code.hz, code.zstab_labels)):
        for s, supp in enumerate(h.row_supports()):
            i, j = labels[s]
            for q in supp:
                qi, qj = code.qubit_labels[q]
                if qj == j:
                    off = (l1[qi] - l1[i]) % n1
                    if 2 * off == n1:
                        d = Direction.E if kind == "X" else Direction.W
                    else:
                        d = Direction.E if _is_forward(off, n1) else Direction.W
                elif qi == i:
                    off = (l2[qj] - l2[j]) % n2
                    d = Direction.N if _is_forward(off, n2) else Direction.S
                else:
                    raise ValueError(f"qubit {q} is not in line with stabilizer {(kind, s)}")
                out.append(TannerEdge(kind, s, q, d))
    return DirectedTanner(code, tuple(out))


@dataclass(frozen=True)
class LemmaCheck:
    lower_ok: bool
    upper_ok: bool
    degree_sum: int
    tanner_degree: int


def lemma_bounds_check(dt: DirectedTanner) -> LemmaCheck:
    """Check ``deg(T) <= sum_D deg(T_D) <= 2 deg(T)``."""
    total = dt.degree_sum
    deg = dt.tanner_degree
    return LemmaCheck(deg <= total, total <= 2 * deg, total, deg)


# ---------------------------------------------------------------------------
# planarity and layer decomposition


def is_planar(g: nx.Graph | Iterable[tuple[Hashable, Hashable]]) -> bool:
    if not isinstance(g, nx.Graph):
        g = nx.Graph(list(g))
    n, m = g.number_of_nodes(), g.number_of_edges()
    if n >= 3 and m > 3 * n - 6:
        return False
    return nx.check_planarity(g)[0]


@dataclass(frozen=True)
class PlanarLayers:
    positions: dict[Hashable, tuple[int, int]] | None
    layers: tuple[tuple[tuple[Hashable, Hashable], ...], ...]
    planar: tuple[bool, ...]
    strategy: str
    max_degree: int

    @property
    def bound(self) -> int:
        return math.ceil(self.max_degree / 2)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def covers(self, g: nx.Graph) -> bool:
        """Layers partition the edge set of ``g`` exactly."""
        seen = [frozenset(e) for layer in self.layers for e in layer]
        return len(seen) == len(set(seen)) and set(seen) == {frozenset(e) for e in g.edges()}


def planar_decomposition(
    g: nx.Graph,
    strategy: str = "two_factor",
    seed: int = 0,
    positions: dict | None = None,
    direction_of: dict | None = None,
) -> PlanarLayers:
    """Partition the edges of ``g`` into at most ``ceil(delta / 2)`` planar layers.

    ``directional`` groups edges by ``direction_of[frozenset(edge)]`` (one
    layer per cardinal direction), merges layers while the union stays planar
    and falls back to ``two_factor`` if any layer is non-planar.
    """
    delta = max((d for _, d in g.degree()), default=0)
    bound = math.ceil(delta / 2)
    if strategy == "two_factor":
        layers = _two_factor_layers(g, seed)
    elif strategy == "greedy":
        layers = _greedy_layers(g)
    elif strategy == "directional":
        if direction_of is None:
            raise ValueError("directional strategy needs edge directions")
        groups: dict[Hashable, list] = {}
        for u, v in g.edges():
            groups.setdefault(direction_of[frozenset((u, v))], []).append((u, v))
        layers = [groups[d] for d in sorted(groups, key=str)]
        if not all(is_planar(nx.Graph(layer)) for layer in layers):
            log.warning("directional layer not planar; falling back to two_factor")
            return planar_decomposition(g, "two_factor", seed, positions)
        layers = _merge_layers(layers)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    layers = [tuple(layer) for layer in layers if layer]
    planar = tuple(is_planar(nx.Graph(layer)) for layer in layers)
    if len(layers) > bound or not all(planar):
        raise StrategyError(f"{strategy} produced {len(layers)} layers, bound is {bound}")
    return PlanarLayers(positions, tuple(layers), planar, strategy, delta)


def _merge_layers(layers: list[list]) -> list[list]:
    layers = [list(x) for x in layers]
    merged = True
    while merged and len(layers) > 1:
        merged = False
        for a in range(len(layers)):
            for b in range(a + 1, len(layers)):
                union = layers[a] + layers[b]
                if is_planar(nx.Graph(union)):
                    layers[a] = union
                    del layers[b]
                    merged = True
                    break
            if merged:
                break
    return layers


def _greedy_layers(g: nx.Graph) -> list[list]:
    layers: list[nx.Graph] = []
    for u, v in g.edges():
        for layer in layers:
            layer.add_edge(u, v)
            if nx.check_planarity(layer)[0]:
                break
            layer.remove_edge(u, v)
        else:
            layers.append(nx.Graph([(u, v)]))
    return [list(layer.edges()) for layer in layers]


def _two_factor_layers(g: nx.Graph, seed: int) -> list[list]:
    """Euler-orientation split into subgraphs of max degree 2.

    Odd-degree vertices are joined to one phantom vertex so every degree is
    even; an Euler circuit of each component orients the edges so that each
    real vertex has in- and out-degree at most ``ceil(delta/2)``. Coloring the
    bipartite out-copy/in-copy graph with that many colors gives classes in
    which each vertex has one outgoing and one incoming edge at most: disjoint
    paths and cycles, hence planar.
    """
    rng = np.random.default_rng(seed)
    phantom = ("__phantom__",)
    mg = nx.MultiGraph()
    mg.add_nodes_from(g.nodes())
    edge_list = list(g.edges())
    order = rng.permutation(len(edge_list)) if edge_list else []
    for k in order:
        u, v = edge_list[k]
        mg.add_edge(u, v, real=True)
    odd = [v for v, d in g.degree() if d % 2]
    for v in odd:
        mg.add_edge(v, phantom, real=False)
    oriented = []
    for comp in nx.connected_components(mg):
        if len(comp) < 2:
            continue
        sub = mg.subgraph(comp)
        start = sorted(comp, key=repr)[0]
        for u, v, key in nx.eulerian_circuit(sub, source=start, keys=True):
            if sub.edges[u, v, key]["real"]:
                oriented.append((u, v))
    bip = [(("out", u), ("in", v)) for u, v in oriented]
    coloring = bipartite_edge_coloring(bip)
    return [[oriented[e] for e in cls] for cls in coloring.classes()]


# ---------------------------------------------------------------------------
# grid placement


def grid_positions(
    code: CssCode, ord1: VertexOrdering | None = None, ord2: VertexOrdering | None = None
) -> dict[int, tuple[int, int]]:
    """Integer grid site ``(row, col)`` for every data qubit and ancilla.

    Roster indices follow :class:`~planarqec.circuits.Circuit`: data qubits
    ``0..n-1``, then X ancillas, then Z ancillas. Label ``(i, j)`` sits at row
    ``labels2[j]`` and column ``labels1[i]``.
    """
    if code.seed_graphs is None:
        raise ValueError("grid positions need an HGP code")
    g1, g2 = code.seed_graphs
    l1 = (ord1 or VertexOrdering.identity(g1.n_vertices)).labels
    l2 = (ord2 or VertexOrdering.identity(g2.n_vertices)).labels
    labels = list(code.qubit_labels) + list(code.xstab_labels) + list(code.zstab_labels)
    return {q: (l2[j], l1[i]) for q, (i, j) in enumerate(labels)}


def crossing_count(positions: dict, edges: Iterable[tuple[Hashable, Hashable]]) -> int:
    """Pairs of straight segments meeting anywhere other than a shared endpoint."""
    segs = [(positions[u], positions[v]) for u, v in edges]
    count = 0
    for a in range(len(segs)):
        p1, p2 = segs[a]
        for b in range(a + 1, len(segs)):
            q1, q2 = segs[b]
            if _segments_conflict(p1, p2, q1, q2):
                count += 1
    return count


def _orient(a, b, c) -> int:
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def _on_segment(a, b, c) -> bool:
    return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])


def _segments_conflict(p1, p2, q1, q2) -> bool:
    shared = {p1, p2} & {q1, q2}
    o1, o2 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    o3, o4 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    if o1 == o2 == o3 == o4 == 0:
        # collinear: conflict when they overlap in more than a shared endpoint
        for pt, (a, b) in ((q1, (p1, p2)), (q2, (p1, p2)), (p1, (q1, q2)), (p2, (q1, q2))):
            if pt not in shared and _on_segment(a, b, pt):
                return True
        return False
    if shared:
        # sharing an endpoint, non-collinear segments meet only there, unless
        # the other endpoint lies on the segment
        for pt, (a, b), o in ((q1, (p1, p2), o1), (q2, (p1, p2), o2), (p1, (q1, q2), o3), (p2, (q1, q2), o4)):
            if pt not in shared and o == 0 and _on_segment(a, b, pt):
                return True
        return False
    if o1 != o2 and o3 != o4:
        return True
    for pt, (a, b), o in ((q1, (p1, p2), o1), (q2, (p1, p2), o2), (p1, (q1, q2), o3), (p2, (q1, q2), o4)):
        if o == 0 and _on_segment(a, b, pt):
            return True
    return False


def cardinal_orderings(
    code: CssCode, seed: int = 0, budget: int = 100_000, restarts: int = 4
) -> tuple[VertexOrdering, VertexOrdering]:
    """Orderings of both seed graphs that minimise directional Tanner degrees.

    Uses the ``excess`` objective with antipodal edges excluded on both axes.
    """
    if code.seed_graphs is None:
        raise ValueError("orderings need an HGP code")
    g1, g2 = code.seed_graphs
    kw = dict(budget=budget, t0=0.5, cooling=0.9999, restarts=restarts,
              avoid_antipodal=True, objective="excess")
    r1 = find_balanced_ordering(g1, seed=seed, **kw)
    r2 = r1 if g2 == g1 else find_balanced_ordering(g2, seed=seed, **kw)
    return r1.ordering, r2.ordering
