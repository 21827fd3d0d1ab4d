"""Stabilizer-measurement circuits: coloration and cardinal schedules.

Qubit roster: data qubits ``0..n-1``, then one ancilla per X stabilizer, then
one per Z stabilizer.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import networkx as nx
import numpy as np

from planarqec.codes import CssCode
from planarqec.coloring import bipartite_edge_coloring
from planarqec.layout import CARDINAL_ORDER, DirectedTanner

PREP_X = "prepare_plus"
PREP_Z = "prepare_zero"
CNOT = "cnot"
MEAS_X = "measure_x"
MEAS_Z = "measure_z"
IDLE = "idle"

OP_KINDS = (PREP_X, PREP_Z, CNOT, MEAS_X, MEAS_Z, IDLE)


class Op(NamedTuple):
    kind: str
    qubits: tuple[int, ...]


class CircuitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Circuit:
    """Depth-indexed schedule over the data + ancilla roster.

    Every timestep lists an operation for every qubit; untouched qubits carry
    an explicit ``idle``.
    """

    n_data: int
    n_xanc: int
    n_zanc: int
    timesteps: tuple[tuple[Op, ...], ...]
    kind: str = ""

    def __post_init__(self):
        for t, step in enumerate(self.timesteps):
            seen: set[int] = set()
            for op in step:
                if op.kind not in OP_KINDS:
                    raise CircuitError(f"unknown op {op.kind!r}")
                if len(op.qubits) != (2 if op.kind == CNOT else 1):
                    raise CircuitError(f"wrong arity for {op}")
                for q in op.qubits:
                    if q in seen or not 0 <= q < self.n_qubits:
                        raise CircuitError(f"timestep {t}: qubit {q} used twice or out of range")
                    seen.add(q)

    @classmethod
    def from_schedule(
        cls, n_data: int, n_xanc: int, n_zanc: int, steps: Iterable[Iterable[Op]], kind: str = ""
    ) -> Circuit:
        """Build a circuit, filling every unused qubit with an idle."""
        nq = n_data + n_xanc + n_zanc
        full = []
        for step in steps:
            step = [Op(o.kind, tuple(int(q) for q in o.qubits)) for o in step]
            busy = {q for o in step for q in o.qubits}
            step += [Op(IDLE, (q,)) for q in range(nq) if q not in busy]
            full.append(tuple(sorted(step, key=lambda o: o.qubits[0])))
        return cls(n_data, n_xanc, n_zanc, tuple(full), kind)

    @property
    def n_qubits(self) -> int:
        return self.n_data + self.n_xanc + self.n_zanc

    @property
    def depth(self) -> int:
        return len(self.timesteps)

    @property
    def xanc(self) -> range:
        return range(self.n_data, self.n_data + self.n_xanc)

    @property
    def zanc(self) -> range:
        return range(self.n_data + self.n_xanc, self.n_qubits)

    def active_ops(self, t: int) -> list[Op]:
        return [o for o in self.timesteps[t] if o.kind != IDLE]

    @cached_property
    def cnots(self) -> list[tuple[int, int, int]]:
        """``(timestep, control, target)`` for every CNOT."""
        return [(t, *o.qubits) for t, step in enumerate(self.timesteps) for o in step if o.kind == CNOT]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_data": self.n_data,
            "n_xanc": self.n_xanc,
            "n_zanc": self.n_zanc,
            "timesteps": [
                [{"op": o.kind, "qubits": list(o.qubits)} for o in step if o.kind != IDLE]
                for step in self.timesteps
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Circuit:
        steps = [[Op(o["op"], tuple(o["qubits"])) for o in step] for step in d["timesteps"]]
        return cls.from_schedule(d["n_data"], d["n_xanc"], d["n_zanc"], steps, d.get("kind", ""))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> Circuit:
        return cls.from_dict(json.loads(Path(path).read_text()))


def depth(c: Circuit) -> int:
    return c.depth


def _x_edges(code: CssCode) -> list[tuple[int, int]]:
    return [(code.n + s, q) for s, supp in enumerate(code.hx.row_supports()) for q in supp]


def _z_edges(code: CssCode) -> list[tuple[int, int]]:
    off = code.n + code.r_x
    return [(off + s, q) for s, supp in enumerate(code.hz.row_supports()) for q in supp]


def _color_layers(edges: Sequence[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    coloring = bipartite_edge_coloring(edges)
    return [[edges[e] for e in cls] for cls in coloring.classes()]


def coloration_circuit(code: CssCode, basis: str = "both") -> Circuit:
    """Measure X and/or Z generators one type at a time, one color per timestep.

    X ancillas control CNOTs onto data; data controls CNOTs onto Z ancillas.
    For ``both``, the Z preparations share the last X CNOT timestep and the
    X measurements share the first Z CNOT timestep, giving depth
    ``deg(T_X) + deg(T_Z) + 2``.
    """
    if basis not in ("X", "Z", "both"):
        raise ValueError("basis must be X, Z or both")
    nx_, nz_ = code.r_x, code.r_z
    xs = code.n + np.arange(nx_)
    zs = code.n + nx_ + np.arange(nz_)
    x_layers = [[Op(CNOT, (a, q)) for a, q in layer] for layer in _color_layers(_x_edges(code))]
    z_layers = [[Op(CNOT, (q, a)) for a, q in layer] for layer in _color_layers(_z_edges(code))]
    prep_x = [Op(PREP_X, (int(a),)) for a in xs]
    prep_z = [Op(PREP_Z, (int(a),)) for a in zs]
    meas_x = [Op(MEAS_X, (int(a),)) for a in xs]
    meas_z = [Op(MEAS_Z, (int(a),)) for a in zs]
    if basis == "X":
        return Circuit.from_schedule(code.n, nx_, 0, [prep_x, *x_layers, meas_x], "coloration-X")
    if basis == "Z":
        # Z-only roster has no X ancillas, so Z ancillas start at n
        shift = {int(a): int(a) - nx_ for a in zs}
        steps = [[Op(o.kind, tuple(shift.get(q, q) for q in o.qubits)) for o in step]
                 for step in (prep_z, *z_layers, meas_z)]
        return Circuit.from_schedule(code.n, 0, nz_, steps, "coloration-Z")
    dx, dz = len(x_layers), len(z_layers)
    steps: list[list[Op]] = [[] for _ in range(dx + dz + 2)]
    steps[0] += prep_x
    for i, layer in enumerate(x_layers):
        steps[1 + i] += layer
    steps[dx] += prep_z  # dx == 0 puts it alongside the X preparations
    steps[dx + 1] += meas_x
    for i, layer in enumerate(z_layers):
        steps[dx + 1 + i] += layer
    steps[dx + dz + 1] += meas_z
    return Circuit.from_schedule(code.n, nx_, nz_, steps, "coloration")


def cardinal_circuit(code: CssCode, dt: DirectedTanner) -> Circuit:
    """Interleaved X/Z measurement scheduled direction by direction (E, N, S, W).

    Within a direction, CNOTs follow a minimum edge coloring of ``T_D``,
    colors in ascending order. Depth is ``sum_D deg(T_D) + 2``.
    """
    if dt.code is not code:
        raise ValueError("directed Tanner graph belongs to a different code")
    xoff, zoff = code.n, code.n + code.r_x
    steps: list[list[Op]] = [
        [Op(PREP_X, (xoff + s,)) for s in range(code.r_x)]
        + [Op(PREP_Z, (zoff + s,)) for s in range(code.r_z)]
    ]
    for d in CARDINAL_ORDER:
        edges = [((e.kind, e.stab), e.qubit) for e in dt.subgraphs[d]]
        if not edges:
            continue
        coloring = bipartite_edge_coloring(edges)
        for cls in coloring.classes():
            layer = []
            for e in cls:
                (kind, s), q = edges[e]
                if kind == "X":
                    layer.append(Op(CNOT, (xoff + s, q)))
                else:
                    layer.append(Op(CNOT, (q, zoff + s)))
            steps.append(layer)
    steps.append(
        [Op(MEAS_X, (xoff + s,)) for s in range(code.r_x)]
        + [Op(MEAS_Z, (zoff + s,)) for s in range(code.r_z)]
    )
    return Circuit.from_schedule(code.n, code.r_x, code.r_z, steps, "cardinal")


def connectivity_graph(c: Circuit) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(c.n_qubits))
    g.add_edges_from((a, b) for _, a, b in c.cnots)
    return g


def direction_map(code: CssCode, dt: DirectedTanner) -> dict[frozenset, str]:
    """Connectivity edge -> direction label, for the directional layer strategy."""
    xoff, zoff = code.n, code.n + code.r_x
    out = {}
    for e in dt.edges:
        anc = (xoff if e.kind == "X" else zoff) + e.stab
        out[frozenset((anc, e.qubit))] = e.direction.value
    return out


# ---------------------------------------------------------------------------
# correctness oracle


@dataclass(frozen=True)
class Verification:
    ok: bool
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _structure_problems(c: Circuit) -> str:
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    preps: dict[int, list[tuple[int, str]]] = {}
    meas: dict[int, list[tuple[int, str]]] = {}
    for t, step in enumerate(c.timesteps):
        for o in step:
            if o.kind == CNOT:
                for q in o.qubits:
                    first.setdefault(q, t)
                    last[q] = t
            elif o.kind in (PREP_X, PREP_Z):
                preps.setdefault(o.qubits[0], []).append((t, o.kind))
            elif o.kind in (MEAS_X, MEAS_Z):
                meas.setdefault(o.qubits[0], []).append((t, o.kind))
    for a in [*c.xanc, *c.zanc]:
        want_p, want_m = (PREP_X, MEAS_X) if a in c.xanc else (PREP_Z, MEAS_Z)
        if len(preps.get(a, [])) != 1 or len(meas.get(a, [])) != 1:
            return f"ancilla {a} must be prepared and measured exactly once"
        (tp, kp), (tm, km) = preps[a][0], meas[a][0]
        if (kp, km) != (want_p, want_m):
            return f"ancilla {a} prepared/measured in the wrong basis"
        if a in first and not (tp < first[a] and last[a] < tm):
            return f"ancilla {a} touched outside its prepare/measure window"
        if tm <= tp:
            return f"ancilla {a} measured before preparation"
    for q in range(c.n_data):
        if q in preps or q in meas:
            return f"data qubit {q} is prepared or measured"
    return ""


def _run_frames(c: Circuit, x: np.ndarray, z: np.ndarray, inject=None):
    """Noiseless symplectic propagation of a batch of frames (rows).

    ``inject[t]`` is a list of ``(row, qubit, xbit, zbit)`` applied after
    timestep ``t``. Returns final frames and a dict ancilla -> outcome column.
    """
    outcomes = {}
    for t, step in enumerate(c.timesteps):
        for o in step:
            if o.kind == CNOT:
                a, b = o.qubits
                x[:, b] ^= x[:, a]
                z[:, a] ^= z[:, b]
            elif o.kind in (PREP_X, PREP_Z):
                x[:, o.qubits[0]] = 0
                z[:, o.qubits[0]] = 0
            elif o.kind == MEAS_X:
                outcomes[o.qubits[0]] = z[:, o.qubits[0]].copy()
            elif o.kind == MEAS_Z:
                outcomes[o.qubits[0]] = x[:, o.qubits[0]].copy()
        if inject and t in inject:
            for row, q, xb, zb in inject[t]:
                x[row, q] ^= xb
                z[row, q] ^= zb
    return x, z, outcomes


def verify_measures_stabilizers(c: Circuit, code: CssCode, trials: int = 100, seed: int = 0) -> Verification:
    """Check that a noiseless circuit measures every generator of ``code``.

    1. Structure: disjoint timesteps, one prepare/measure per ancilla in the
       right basis, CNOTs inside that window.
    2. Forward errors: every single-qubit X/Z data error and ``trials``
       random data Paulis flip exactly the ancillas given by the syndrome and
       leave the data frame unchanged up to stabilizers.
    3. Back-action: each ancilla's prepared-state stabilizer (X for |+>, Z for
       |0>), pushed forward from its preparation, must not flip any
       measurement and must end as the generator on the data.

    Check 3 catches a mis-ordered X/Z CNOT pair on an overlapping generator
    pair: the uncancelled crossing leaves a Pauli on the other ancilla that
    anticommutes with its measurement.
    """
    if c.n_data != code.n or c.n_xanc not in (0, code.r_x) or c.n_zanc not in (0, code.r_z):
        return Verification(False, "circuit roster does not match the code")
    problem = _structure_problems(c)
    if problem:
        return Verification(False, problem)
    n, nq = code.n, c.n_qubits
    hx, hz = code.hx.array, code.hz.array
    rng = np.random.default_rng(seed)

    # forward data errors
    basis = np.eye(n, dtype=np.uint8)
    rand_x = rng.integers(0, 2, (trials, n), dtype=np.uint8)
    rand_z = rng.integers(0, 2, (trials, n), dtype=np.uint8)
    ex = np.vstack([basis, np.zeros((n, n), np.uint8), rand_x])
    ez = np.vstack([np.zeros((n, n), np.uint8), basis, rand_z])
    x = np.zeros((len(ex), nq), np.uint8)
    z = np.zeros((len(ex), nq), np.uint8)
    x[:, :n], z[:, :n] = ex, ez
    x, z, out = _run_frames(c, x, z)
    sx = (ez.astype(np.int64) @ hx.T % 2).astype(np.uint8)
    sz = (ex.astype(np.int64) @ hz.T % 2).astype(np.uint8)
    for s, a in enumerate(c.xanc):
        bad = np.flatnonzero(out[a] != sx[:, s])
        if bad.size:
            return Verification(False, f"X generator {s}: wrong outcome for input error #{bad[0]}")
    for s, a in enumerate(c.zanc):
        bad = np.flatnonzero(out[a] != sz[:, s])
        if bad.size:
            return Verification(False, f"Z generator {s}: wrong outcome for input error #{bad[0]}")
    dx, dz = x[:, :n] ^ ex, z[:, :n] ^ ez
    for row in np.flatnonzero(dx.any(axis=1) | dz.any(axis=1)):
        if not (code.hx.in_rowspace(dx[row]) and code.hz.in_rowspace(dz[row])):
            return Verification(False, f"input error #{row} changed the data beyond a stabilizer")

    # back-action of each ancilla's own stabilizer
    ancillas = [*c.xanc, *c.zanc]
    prep_time = {}
    for t, step in enumerate(c.timesteps):
        for o in step:
            if o.kind in (PREP_X, PREP_Z):
                prep_time[o.qubits[0]] = t
    inject: dict[int, list] = {}
    for row, a in enumerate(ancillas):
        is_x = a in c.xanc
        inject.setdefault(prep_time[a], []).append((row, a, int(is_x), int(not is_x)))
    x = np.zeros((len(ancillas), nq), np.uint8)
    z = np.zeros((len(ancillas), nq), np.uint8)
    x, z, out = _run_frames(c, x, z, inject)
    for row, a in enumerate(ancillas):
        flipped = [b for b in ancillas if out[b][row]]
        if flipped:
            kind, s = ("X", a - n) if a in c.xanc else ("Z", a - n - c.n_xanc)
            return Verification(
                False, f"{kind} generator {s}: its stabilizer flips the outcome of ancilla {flipped[0]}"
            )
        if a in c.xanc:
            s = a - n
            ok = np.array_equal(x[row, :n], hx[s]) and not z[row, :n].any()
        else:
            s = a - n - c.n_xanc
            ok = np.array_equal(z[row, :n], hz[s]) and not x[row, :n].any()
        if not ok:
            return Verification(False, f"ancilla {a} does not couple to its generator's support")
    return Verification(True)
