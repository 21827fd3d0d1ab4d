"""Bipartite seed graphs and hypergraph product CSS codes."""

from __future__ import annotations

import enum
import json
import logging
import math
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from planarqec.gf2 import Gf2Matrix

log = logging.getLogger(__name__)


class BudgetExhaustedError(RuntimeError):
    """No graph meeting the requested constraints was found."""


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph with bit vertices ``0..n_bits-1`` and checks ``0..n_checks-1``.

    Vertices of the combined vertex set are numbered bits first, then checks,
    so check ``c`` is vertex ``n_bits + c``.
    """

    n_bits: int
    n_checks: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple(sorted((int(b), int(c)) for b, c in self.edges))
        if len(set(edges)) != len(edges):
            raise ValueError("parallel edges are not allowed")
        for b, c in edges:
            if not (0 <= b < self.n_bits and 0 <= c < self.n_checks):
                raise ValueError(f"edge {(b, c)} out of range")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_matrix(cls, h: np.ndarray | Gf2Matrix) -> BipartiteGraph:
        """Tanner graph of a classical parity-check matrix (rows are checks)."""
        a = h.array if isinstance(h, Gf2Matrix) else np.asarray(h)
        checks, bits = np.nonzero(a)
        return cls(a.shape[1], a.shape[0], tuple(zip(bits.tolist(), checks.tolist())))

    @property
    def n_vertices(self) -> int:
        return self.n_bits + self.n_checks

    def is_bit(self, v: int) -> bool:
        return v < self.n_bits

    def vertex_edges(self) -> list[tuple[int, int]]:
        """Edges as pairs of combined vertex indices."""
        return [(b, self.n_bits + c) for b, c in self.edges]

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in self.vertex_edges():
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    def parity_check_matrix(self) -> Gf2Matrix:
        h = np.zeros((self.n_checks, self.n_bits), dtype=np.uint8)
        for b, c in self.edges:
            h[c, b] = 1
        return Gf2Matrix(h)

    def to_dict(self) -> dict:
        return {"n_bits": self.n_bits, "n_checks": self.n_checks, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, d: dict) -> BipartiteGraph:
        return cls(d["n_bits"], d["n_checks"], tuple(tuple(e) for e in d["edges"]))


def cycle_graph(d: int) -> BipartiteGraph:
    """Tanner graph of the length-``d`` cyclic repetition code, a cycle on ``2d`` vertices.

    Check ``i`` joins bits ``i`` and ``i + 1 (mod d)``.
    """
    if d < 2:
        raise ValueError("cycle graph needs d >= 2")
    edges = [(i, i) for i in range(d)] + [((i + 1) % d, i) for i in range(d)]
    return BipartiteGraph(d, d, tuple(edges))


def single_edge() -> BipartiteGraph:
    return BipartiteGraph(1, 1, ((0, 0),))


def girth(g: BipartiteGraph) -> float:
    """Length of the shortest cycle, ``math.inf`` for forests."""
    adj = g.adjacency
    best = math.inf
    for root in range(g.n_vertices):
        best = min(best, _shortest_cycle_through(adj, root, best))
    return best


def _shortest_cycle_through(adj, root: int, cutoff: float) -> float:
    # BFS; a non-tree edge (u, w) closes a cycle of length <= dist[u] + dist[w] + 1
    dist = {root: 0}
    parent = {root: -1}
    queue = deque([root])
    best = cutoff
    while queue:
        u = queue.popleft()
        if 2 * dist[u] + 1 >= best:
            break
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                parent[w] = u
                queue.append(w)
            elif parent[u] != w:
                best = min(best, dist[u] + dist[w] + 1)
    return best


def _edge_on_short_cycle(adj: dict, u: int, v: int, skip: int, limit: int) -> bool:
    # is there a u-v path of length <= limit that avoids edge id `skip`?
    dist = {u: 0}
    frontier = [u]
    while frontier:
        nxt = []
        for x in frontier:
            if dist[x] >= limit:
                continue
            for y, kk in adj[x]:
                if kk == skip:
                    continue
                if y == v:
                    return True
                if y not in dist:
                    dist[y] = dist[x] + 1
                    nxt.append(y)
        frontier = nxt
    return False


def _adjacency(n_bits: int, edges: list[tuple[int, int]]) -> dict[int, list[tuple[int, int]]]:
    adj: dict[int, list[tuple[int, int]]] = {}
    for k, (b, c) in enumerate(edges):
        adj.setdefault(b, []).append((n_bits + c, k))
        adj.setdefault(n_bits + c, []).append((b, k))
    return adj


def _short_cycle_edges(n_bits: int, edges: list[tuple[int, int]], girth_min: int) -> list[int]:
    """Indices of edges that lie on a cycle shorter than ``girth_min``.

    Parallel edges count as 2-cycles.
    """
    adj = _adjacency(n_bits, edges)
    return [
        k for k, (b, c) in enumerate(edges)
        if _edge_on_short_cycle(adj, b, n_bits + c, k, girth_min - 2)
    ]


def random_biregular(
    s: int,
    bit_degree: int = 3,
    check_degree: int = 4,
    girth_min: int = 8,
    seed: int | None = None,
    attempt_budget: int = 20,
    swap_budget: int | None = None,
) -> BipartiteGraph:
    """Random biregular graph with ``check_degree * s`` bits and ``bit_degree * s`` checks.

    Stubs are paired uniformly at random, then random edge swaps remove
    parallel edges and short cycles. A swap is kept when it does not increase
    the number of edges lying on a short cycle. Each of the
    ``attempt_budget`` restarts gets ``swap_budget`` swaps.
    """
    n_bits, n_checks = check_degree * s, bit_degree * s
    if n_bits * bit_degree != n_checks * check_degree:
        raise ValueError("inconsistent edge count")
    rng = np.random.default_rng(seed)
    n_edges = n_bits * bit_degree
    if swap_budget is None:
        swap_budget = 20 * n_edges
    bit_stubs = np.repeat(np.arange(n_bits), bit_degree)
    check_stubs = np.repeat(np.arange(n_checks), check_degree)
    for attempt in range(attempt_budget):
        perm = rng.permutation(n_edges)
        edges = list(zip(bit_stubs.tolist(), check_stubs[perm].tolist()))
        bad = _short_cycle_edges(n_bits, edges, girth_min)
        for _ in range(swap_budget):
            if not bad:
                break
            k1 = bad[rng.integers(len(bad))]
            k2 = int(rng.integers(n_edges))
            (b1, c1), (b2, c2) = edges[k1], edges[k2]
            if k1 == k2 or c1 == c2:
                continue
            edges[k1], edges[k2] = (b1, c2), (b2, c1)
            # fast path: if neither new edge closes a short cycle, no short cycle
            # was created and at least one through k1 was destroyed
            adj = _adjacency(n_bits, edges)
            limit = girth_min - 2
            if not (
                _edge_on_short_cycle(adj, b1, n_bits + c2, k1, limit)
                or _edge_on_short_cycle(adj, b2, n_bits + c1, k2, limit)
            ):
                bad = _short_cycle_edges(n_bits, edges, girth_min)
                continue
            new_bad = _short_cycle_edges(n_bits, edges, girth_min)
            if len(new_bad) <= len(bad):
                bad = new_bad
            else:
                edges[k1], edges[k2] = (b1, c1), (b2, c2)
        if not bad:
            log.debug("biregular graph found on attempt %d", attempt)
            return BipartiteGraph(n_bits, n_checks, tuple(edges))
    raise BudgetExhaustedError(
        f"no ({bit_degree},{check_degree})-biregular graph with girth >= {girth_min} "
        f"for s={s} within {attempt_budget} attempts"
    )


class Classification(str, enum.Enum):
    STABILIZER = "stabilizer"
    LOGICAL = "logical"
    DETECTABLE = "detectable"


@dataclass(frozen=True)
class PauliOperator:
    """Pauli operator up to phase, as X and Z support bit vectors."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8) % 2
        z = np.asarray(self.z, dtype=np.uint8) % 2
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z supports must be vectors of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @classmethod
    def identity(cls, n: int) -> PauliOperator:
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def single(cls, n: int, qubit: int, pauli: str) -> PauliOperator:
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        if pauli in "XY":
            x[qubit] = 1
        if pauli in "ZY":
            z[qubit] = 1
        return cls(x, z)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def __mul__(self, other: PauliOperator) -> PauliOperator:
        return PauliOperator(self.x ^ other.x, self.z ^ other.z)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, PauliOperator)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.z.tobytes()))


Label = tuple[int, int]


@dataclass(frozen=True, eq=False)
class CssCode:
    """CSS code given by X and Z parity-check matrices.

    Label maps carry the HGP coordinate pair ``(v1, v2)`` of each qubit and
    stabilizer, where ``v1`` and ``v2`` are combined vertex indices of the seed
    graphs. They are empty for codes not built by :func:`hgp`.
    """

    hx: Gf2Matrix
    hz: Gf2Matrix
    qubit_labels: tuple[Label, ...] = ()
    xstab_labels: tuple[Label, ...] = ()
    zstab_labels: tuple[Label, ...] = ()
    seed_graphs: tuple[BipartiteGraph, BipartiteGraph] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hx.cols != self.hz.cols:
            raise ValueError("Hx and Hz must have the same number of columns")
        if not (self.hx @ self.hz.T).is_zero():
            raise ValueError("stabilizers do not commute: Hx Hz^T != 0")

    @property
    def n(self) -> int:
        return self.hx.cols

    @property
    def r_x(self) -> int:
        return self.hx.rows

    @property
    def r_z(self) -> int:
        return self.hz.rows

    @cached_property
    def k(self) -> int:
        return self.n - self.hx.rank() - self.hz.rank()

    @cached_property
    def logical_x(self) -> np.ndarray:
        """X logicals: a basis of ker(Hz) modulo the row space of Hx."""
        return _logical_basis(self.hz, self.hx)

    @cached_property
    def logical_z(self) -> np.ndarray:
        """Z logicals: a basis of ker(Hx) modulo the row space of Hz."""
        return _logical_basis(self.hx, self.hz)

    @property
    def tanner_degree(self) -> int:
        """Maximum degree of the full Tanner graph ``T = T_X u T_Z``."""
        qdeg = self.hx.array.sum(axis=0) + self.hz.array.sum(axis=0)
        sdeg = np.concatenate([self.hx.array.sum(axis=1), self.hz.array.sum(axis=1)])
        return int(max(qdeg.max(initial=0), sdeg.max(initial=0)))

    @property
    def x_tanner_degree(self) -> int:
        a = self.hx.array
        return int(max(a.sum(axis=0).max(initial=0), a.sum(axis=1).max(initial=0)))

    @property
    def z_tanner_degree(self) -> int:
        a = self.hz.array
        return int(max(a.sum(axis=0).max(initial=0), a.sum(axis=1).max(initial=0)))

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "k": self.k,
            "hx": self.hx.row_supports(),
            "hz": self.hz.row_supports(),
            "qubit_labels": [list(lb) for lb in self.qubit_labels],
            "xstab_labels": [list(lb) for lb in self.xstab_labels],
            "zstab_labels": [list(lb) for lb in self.zstab_labels],
            "seed_graphs": [g.to_dict() for g in self.seed_graphs] if self.seed_graphs else None,
        }
        if self.metadata:
            d["metadata"] = self.metadata
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CssCode:
        n = d["n"]
        graphs = d.get("seed_graphs")
        return cls(
            hx=Gf2Matrix.from_supports(d["hx"], n),
            hz=Gf2Matrix.from_supports(d["hz"], n),
            qubit_labels=tuple(tuple(lb) for lb in d.get("qubit_labels", [])),
            xstab_labels=tuple(tuple(lb) for lb in d.get("xstab_labels", [])),
            zstab_labels=tuple(tuple(lb) for lb in d.get("zstab_labels", [])),
            seed_graphs=tuple(BipartiteGraph.from_dict(g) for g in graphs) if graphs else None,
            metadata=d.get("metadata", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> CssCode:
        return cls.from_dict(json.loads(Path(path).read_text()))


def _logical_basis(h_detect: Gf2Matrix, h_stab: Gf2Matrix) -> np.ndarray:
    # vectors of ker(h_detect) independent of rowspace(h_stab)
    kernel = h_detect.nullspace().array
    rows = list(h_stab.rowspace_basis().array)
    rank = len(rows)
    out = []
    for v in kernel:
        if Gf2Matrix(np.array(rows + [v])).rank() > rank:
            rows.append(v)
            rank += 1
            out.append(v)
    return np.array(out, dtype=np.uint8).reshape(len(out), h_detect.cols)


def hgp(g1: BipartiteGraph, g2: BipartiteGraph) -> CssCode:
    """Hypergraph product code of two bipartite graphs.

    Qubits are ``B1 x B2`` followed by ``C1 x C2``; X stabilizers are
    ``B1 x C2`` and Z stabilizers ``C1 x B2``, each in row-major order. The
    stabilizer labelled ``(i, j)`` acts on ``(i', j)`` for every neighbour
    ``i'`` of ``i`` in ``g1`` and on ``(i, j')`` for every neighbour ``j'`` of
    ``j`` in ``g2``.
    """
    if not g1.edges or not g2.edges:
        raise ValueError("seed graphs must be nonempty")
    b1, c1 = range(g1.n_bits), range(g1.n_bits, g1.n_vertices)
    b2, c2 = range(g2.n_bits), range(g2.n_bits, g2.n_vertices)
    qubits = [(i, j) for i in b1 for j in b2] + [(i, j) for i in c1 for j in c2]
    xstabs = [(i, j) for i in b1 for j in c2]
    zstabs = [(i, j) for i in c1 for j in b2]
    qindex = {lb: q for q, lb in enumerate(qubits)}
    adj1, adj2 = g1.adjacency, g2.adjacency

    def supports(stabs):
        out = []
        for i, j in stabs:
            supp = [qindex[(ii, j)] for ii in adj1[i]] + [qindex[(i, jj)] for jj in adj2[j]]
            out.append(sorted(supp))
        return out

    n = len(qubits)
    return CssCode(
        hx=Gf2Matrix.from_supports(supports(xstabs), n),
        hz=Gf2Matrix.from_supports(supports(zstabs), n),
        qubit_labels=tuple(qubits),
        xstab_labels=tuple(xstabs),
        zstab_labels=tuple(zstabs),
        seed_graphs=(g1, g2),
    )


def toric_code(d: int) -> CssCode:
    """Distance-``d`` toric code as the HGP of two cyclic repetition codes."""
    g = cycle_graph(d)
    return hgp(g, g)


def expected_hgp_parameters(s: int) -> tuple[int, int]:
    """``(n, k)`` for the product of two (3,4)-biregular graphs of full-rank checks."""
    return 25 * s * s, s * s


def check_hgp_parameters(code: CssCode, s: int) -> list[str]:
    """Describe any mismatch between the rank-derived ``(n, k)`` and ``(25s^2, s^2)``."""
    n_exp, k_exp = expected_hgp_parameters(s)
    problems = []
    if code.n != n_exp:
        problems.append(f"n={code.n}, expected {n_exp}")
    if code.k != k_exp:
        problems.append(f"k={code.k}, expected {k_exp} (seed checks not full rank?)")
    for msg in problems:
        log.warning("HGP parameter discrepancy for s=%d: %s", s, msg)
    return problems


def syndrome(code: CssCode, e: PauliOperator) -> tuple[np.ndarray, np.ndarray]:
    """``(Hx e_z, Hz e_x)``: X checks see Z components and vice versa."""
    if e.n != code.n:
        raise ValueError(f"operator has length {e.n}, code has {code.n} qubits")
    return code.hx @ e.z, code.hz @ e.x


def classify(code: CssCode, e: PauliOperator) -> Classification:
    """Detectable, stabilizer, or nontrivial logical, using row-space membership."""
    sx, sz = syndrome(code, e)
    if sx.any() or sz.any():
        return Classification.DETECTABLE
    if code.hx.in_rowspace(e.x) and code.hz.in_rowspace(e.z):
        return Classification.STABILIZER
    return Classification.LOGICAL


def is_logical_fast(code: CssCode, e: PauliOperator) -> bool:
    """Logical test for a syndrome-free operator via anticommutation with logicals."""
    lx, lz = code.logical_x, code.logical_z
    return bool((lz.astype(np.int64) @ e.x % 2).any() or (lx.astype(np.int64) @ e.z % 2).any())


def stabilizer_group_element(code: CssCode, x_rows: Iterable[int] = (), z_rows: Iterable[int] = ()) -> PauliOperator:
    x = np.zeros(code.n, np.uint8)
    z = np.zeros(code.n, np.uint8)
    for r in x_rows:
        x ^= code.hx.array[r]
    for r in z_rows:
        z ^= code.hz.array[r]
    return PauliOperator(x, z)


def ssf_ranking_failures(
    code: CssCode, p: float, trials: int, seed: int | None = None
) -> int:
    """Failures of SSF on i.i.d. bit-flip noise, used to rank sampled codes."""
    from planarqec.decoder import ssf_pass

    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(trials):
        x = (rng.random(code.n) < p).astype(np.uint8)
        state = ssf_pass(code, "z", code.hz @ x)
        residual = PauliOperator(x ^ state.flips, np.zeros(code.n, np.uint8))
        if not state.converged or is_logical_fast(code, residual):
            failures += 1
    return failures


def generate_hgp_code(
    s: int,
    seed: int = 0,
    girth_min: int = 8,
    samples: int = 1,
    rank_p: float = 0.03,
    rank_trials: int = 200,
    attempt_budget: int = 20,
) -> CssCode:
    """Sample ``samples`` HGP codes from (3,4)-biregular graphs and keep the best.

    Seed graphs whose check matrix is rank deficient are resampled so that
    ``k = s^2``. With more than one sample, the code with the fewest SSF
    failures on i.i.d. bit flips at rate ``rank_p`` wins; ties go to the
    earliest sample.
    """
    seq = np.random.SeedSequence(seed)
    best: tuple[int, int, CssCode] | None = None
    for idx, child in enumerate(seq.spawn(samples)):
        gen = np.random.default_rng(child)
        g = None
        for _ in range(attempt_budget):
            cand = random_biregular(
                s, girth_min=girth_min, seed=int(gen.integers(2**63)), attempt_budget=attempt_budget
            )
            if cand.parity_check_matrix().rank() == cand.n_checks:
                g = cand
                break
        if g is None:
            raise BudgetExhaustedError(f"no full-rank seed graph for s={s} within budget")
        code = hgp(g, g)
        check_hgp_parameters(code, s)
        fails = ssf_ranking_failures(code, rank_p, rank_trials, seed=int(gen.integers(2**63))) if samples > 1 else 0
        log.info("sample %d: girth=%s ssf_failures=%d", idx, girth(g), fails)
        if best is None or fails < best[0]:
            best = (fails, idx, code)
    fails, idx, code = best
    meta = {"s": s, "seed": seed, "girth_min": girth_min, "girth": girth(code.seed_graphs[0]),
            "samples": samples, "chosen_sample": idx, "ranking_failures": fails,
            "rank_p": rank_p, "rank_trials": rank_trials}
    return CssCode(code.hx, code.hz, code.qubit_labels, code.xstab_labels, code.zstab_labels,
                   code.seed_graphs, meta)
