"""Circuit-level Pauli noise and batched Pauli-frame simulation of repeated rounds.

Every operation (preparations, CNOTs, measurements and idles) fails
independently with probability ``p``. A failed single-qubit operation is
followed by a uniform X, Y or Z; a failed CNOT by one of the 15 non-identity
two-qubit Paulis; a failed measurement reports the flipped outcome. Phases are
not tracked.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from planarqec.circuits import CNOT, MEAS_X, MEAS_Z, PREP_X, PREP_Z, Circuit, Op
from planarqec.codes import CssCode, PauliOperator

# one-qubit Pauli codes: bit 0 = X part, bit 1 = Z part (1=X, 2=Z, 3=Y)
PAULI_NAMES = {1: "X", 2: "Z", 3: "Y"}
_KIND_1Q, _KIND_2Q, _KIND_FLIP = 0, 1, 2


@dataclass(frozen=True)
class NoiseModel:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"fault probability must be in [0, 1], got {self.p}")


def _fault_kind(op: Op) -> int:
    if op.kind == CNOT:
        return _KIND_2Q
    if op.kind in (MEAS_X, MEAS_Z):
        return _KIND_FLIP
    return _KIND_1Q


def sample_fault(op: Op, p: float, rng: np.random.Generator) -> str | None:
    """Fault following ``op``, or None.

    Returns ``"X"``/``"Y"``/``"Z"`` for single-qubit operations, a two-letter
    string such as ``"XZ"`` (control first) for CNOTs, and ``"flip"`` for
    measurements.
    """
    if rng.random() >= p:
        return None
    kind = _fault_kind(op)
    if kind == _KIND_FLIP:
        return "flip"
    if kind == _KIND_1Q:
        return PAULI_NAMES[int(rng.integers(1, 4))]
    v = int(rng.integers(1, 16))
    return PAULI_NAMES.get(v & 3, "I") + PAULI_NAMES.get(v >> 2, "I")


@dataclass
class PauliFrame:
    """Accumulated X/Z error over the whole roster."""

    x: np.ndarray
    z: np.ndarray

    @classmethod
    def zeros(cls, n_qubits: int) -> PauliFrame:
        return cls(np.zeros(n_qubits, np.uint8), np.zeros(n_qubits, np.uint8))

    def copy(self) -> PauliFrame:
        return PauliFrame(self.x.copy(), self.z.copy())


def propagate(
    frame: PauliFrame, timestep: Iterable[Op], flipped: Iterable[int] = ()
) -> tuple[PauliFrame, dict[int, int]]:
    """Push a frame through one timestep of disjoint operations.

    Returns the new frame and the measured outcome bit of every measured
    qubit; qubits listed in ``flipped`` have their outcome inverted.
    """
    out = frame.copy()
    outcomes: dict[int, int] = {}
    flipped = set(flipped)
    for op in timestep:
        if op.kind == CNOT:
            c, t = op.qubits
            out.x[t] ^= out.x[c]
            out.z[c] ^= out.z[t]
        elif op.kind in (PREP_X, PREP_Z):
            out.x[op.qubits[0]] = 0
            out.z[op.qubits[0]] = 0
        elif op.kind == MEAS_X:
            q = op.qubits[0]
            outcomes[q] = int(out.z[q]) ^ (q in flipped)
        elif op.kind == MEAS_Z:
            q = op.qubits[0]
            outcomes[q] = int(out.x[q]) ^ (q in flipped)
    return out, outcomes


@dataclass(frozen=True)
class SyndromeRecord:
    """Outcomes of ``rounds`` noisy rounds plus one perfect round for one trial.

    ``residual`` is the hidden data-qubit frame after the last round; decoders
    must not read it.
    """

    rounds: int
    x_outcomes: np.ndarray  # (rounds, r_x)
    z_outcomes: np.ndarray  # (rounds, r_z)
    final_x: np.ndarray
    final_z: np.ndarray
    residual: PauliOperator
    p: float = 0.0
    seed: int = 0
    trial: int = 0


@dataclass(frozen=True)
class SyndromeBatch:
    rounds: int
    x_outcomes: np.ndarray  # (trials, rounds, r_x)
    z_outcomes: np.ndarray
    final_x: np.ndarray  # (trials, r_x)
    final_z: np.ndarray
    residual_x: np.ndarray  # (trials, n)
    residual_z: np.ndarray
    p: float
    seed: int
    start: int

    def __len__(self) -> int:
        return self.final_x.shape[0]

    def record(self, i: int) -> SyndromeRecord:
        return SyndromeRecord(
            self.rounds, self.x_outcomes[i], self.z_outcomes[i], self.final_x[i], self.final_z[i],
            PauliOperator(self.residual_x[i], self.residual_z[i]), self.p, self.seed, self.start + i,
        )


class _Plan:
    """Per-timestep index arrays and the flat fault-location table of a circuit."""

    def __init__(self, c: Circuit):
        self.circuit = c
        self.steps = []
        kinds, q0, q1, col, tstep = [], [], [], [], []
        n_anc_x = c.n_xanc
        for t, step in enumerate(c.timesteps):
            ct, tg, prep, mx, mxc, mz, mzc = [], [], [], [], [], [], []
            for o in step:
                if o.kind == CNOT:
                    ct.append(o.qubits[0])
                    tg.append(o.qubits[1])
                elif o.kind in (PREP_X, PREP_Z):
                    prep.append(o.qubits[0])
                elif o.kind == MEAS_X:
                    mx.append(o.qubits[0])
                    mxc.append(o.qubits[0] - c.n_data)
                elif o.kind == MEAS_Z:
                    mz.append(o.qubits[0])
                    mzc.append(o.qubits[0] - c.n_data - n_anc_x)
                kinds.append(_fault_kind(o))
                q0.append(o.qubits[0])
                q1.append(o.qubits[1] if o.kind == CNOT else -1)
                if o.kind == MEAS_X:
                    col.append(o.qubits[0] - c.n_data)
                elif o.kind == MEAS_Z:
                    col.append(o.qubits[0] - c.n_data - n_anc_x)
                else:
                    col.append(-1)
                tstep.append(t)
            arr = lambda v: np.array(v, dtype=np.intp)
            self.steps.append((arr(ct), arr(tg), arr(prep), arr(mx), arr(mxc), arr(mz), arr(mzc)))
        self.kind = np.array(kinds, dtype=np.int8)
        self.q0 = np.array(q0, dtype=np.intp)
        self.q1 = np.array(q1, dtype=np.intp)
        self.col = np.array(col, dtype=np.intp)
        self.tstep = np.array(tstep, dtype=np.intp)
        self.size = len(kinds)
        # location ranges per timestep, locations are grouped by timestep
        self.step_bounds = np.searchsorted(self.tstep, np.arange(c.depth + 1))


_PLANS: dict[int, _Plan] = {}


def _plan(c: Circuit) -> _Plan:
    key = id(c)
    plan = _PLANS.get(key)
    if plan is None or plan.circuit is not c:
        plan = _PLANS[key] = _Plan(c)
    return plan


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from (master seed, trial index)."""
    return np.random.default_rng([int(seed), int(trial)])


def sample_trial_faults(plan: _Plan, p: float, rounds: int, rng: np.random.Generator):
    """Fault events ``(global location, pauli code)`` for one trial's noisy rounds.

    Locations form a Bernoulli(p) process drawn via geometric gaps in chunks
    whose size depends only on ``p`` and the round size, with each chunk's
    Pauli draws taken right after its gaps. The stream is therefore a prefix
    of the same trial's stream for any larger ``rounds``.
    """
    total = rounds * plan.size
    if p <= 0.0 or total == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    if p >= 1.0:
        pos = np.arange(total, dtype=np.int64)
        draws = rng.random(total)
    else:
        k = int(p * plan.size + 4 * math.sqrt(p * plan.size) + 8)
        chunks, dchunks = [], []
        last = -1
        while last < total:
            cand = last + np.cumsum(rng.geometric(p, size=k))
            d = rng.random(k)
            keep = cand < total
            chunks.append(cand[keep])
            dchunks.append(d[keep])
            last = int(cand[-1])
        pos = np.concatenate(chunks)
        draws = np.concatenate(dchunks)
    kinds = plan.kind[pos % plan.size]
    codes = np.ones(pos.size, dtype=np.int64)
    m1, m2 = kinds == _KIND_1Q, kinds == _KIND_2Q
    codes[m1] = 1 + (draws[m1] * 3).astype(np.int64)
    codes[m2] = 1 + (draws[m2] * 15).astype(np.int64)
    return pos, codes


def simulate_batch(
    circuit: Circuit,
    code: CssCode,
    nm: NoiseModel,
    rounds: int,
    seed: int,
    trials: int,
    start: int = 0,
    initial: PauliOperator | None = None,
) -> SyndromeBatch:
    """Simulate trials ``start .. start + trials - 1`` of repeated extraction.

    Each trial draws its faults from :func:`trial_rng` so results do not
    depend on how trials are batched. After ``rounds`` noisy rounds one
    noiseless round is appended. ``initial`` is an optional data-qubit Pauli
    present before the first round.
    """
    plan = _plan(circuit)
    tr_idx, loc_idx, pauli = [], [], []
    for i in range(trials):
        pos, codes = sample_trial_faults(plan, nm.p, rounds, trial_rng(seed, start + i))
        tr_idx.append(np.full(pos.size, i, dtype=np.intp))
        loc_idx.append(pos)
        pauli.append(codes)
    return _run(plan, rounds, trials, tr_idx, loc_idx, pauli, initial, nm.p, seed, start)


def simulate_faults(
    circuit: Circuit,
    code: CssCode,
    rounds: int,
    faults: Iterable[tuple[int, int, int]],
    initial: PauliOperator | None = None,
) -> SyndromeRecord:
    """Noiseless run with explicit faults ``(round, location, pauli code)``.

    Locations index the operations of one round in timestep order (idles
    included). Pauli codes follow the sampler: 1=X, 2=Z, 3=Y on one qubit;
    ``a + 4 b`` on a CNOT's (control, target); any value for a measurement flip.
    """
    plan = _plan(circuit)
    faults = list(faults)
    rows = [(int(r) * plan.size + int(loc), int(v)) for r, loc, v in faults]
    for (g, _), (r, loc, _) in zip(rows, faults):
        if not (0 <= r < rounds and 0 <= loc < plan.size):
            raise ValueError(f"fault ({r}, {loc}) outside {rounds} rounds x {plan.size} locations")
    loc_idx = [np.array([g for g, _ in rows], dtype=np.int64)]
    pauli = [np.array([v for _, v in rows], dtype=np.int64)]
    tr_idx = [np.zeros(len(rows), dtype=np.intp)]
    return _run(plan, rounds, 1, tr_idx, loc_idx, pauli, initial, 0.0, 0, 0).record(0)


def _run(plan, rounds, trials, tr_idx, loc_idx, pauli, initial, p, seed, start) -> SyndromeBatch:
    circuit = plan.circuit
    n, nq = circuit.n_data, circuit.n_qubits
    rx, rz = circuit.n_xanc, circuit.n_zanc
    tr_idx = np.concatenate(tr_idx) if tr_idx else np.zeros(0, np.intp)
    loc_idx = np.concatenate(loc_idx) if loc_idx else np.zeros(0, np.int64)
    pauli = np.concatenate(pauli) if pauli else np.zeros(0, np.int64)
    order = np.argsort(loc_idx, kind="stable")
    tr_idx, loc_idx, pauli = tr_idx[order], loc_idx[order], pauli[order]

    x = np.zeros((trials, nq), np.uint8)
    z = np.zeros((trials, nq), np.uint8)
    if initial is not None:
        x[:, :n] ^= initial.x
        z[:, :n] ^= initial.z
    out_x = np.zeros((trials, rounds + 1, rx), np.uint8)
    out_z = np.zeros((trials, rounds + 1, rz), np.uint8)
    # event slice per (round, timestep)
    bounds = np.searchsorted(loc_idx, np.arange(rounds * plan.size + 1))
    for r in range(rounds + 1):
        for t, (ct, tg, prep, mx, mxc, mz, mzc) in enumerate(plan.steps):
            if ct.size:
                x[:, tg] ^= x[:, ct]
                z[:, ct] ^= z[:, tg]
            if prep.size:
                x[:, prep] = 0
                z[:, prep] = 0
            if mx.size:
                out_x[:, r, mxc] = z[:, mx]
            if mz.size:
                out_z[:, r, mzc] = x[:, mz]
            if r == rounds:
                continue
            lo_loc = r * plan.size + plan.step_bounds[t]
            hi_loc = r * plan.size + plan.step_bounds[t + 1]
            lo, hi = bounds[lo_loc], bounds[hi_loc]
            if lo == hi:
                continue
            _apply_faults(plan, x, z, out_x, out_z, r, tr_idx[lo:hi], loc_idx[lo:hi] % plan.size, pauli[lo:hi])
    return SyndromeBatch(
        rounds, out_x[:, :rounds], out_z[:, :rounds], out_x[:, rounds], out_z[:, rounds],
        x[:, :n].copy(), z[:, :n].copy(), p, seed, start,
    )


def _apply_faults(plan, x, z, out_x, out_z, r, tr, loc, pauli):
    kind = plan.kind[loc]
    f = kind == _KIND_FLIP
    if f.any():
        cols = plan.col[loc[f]]
        q = plan.q0[loc[f]]
        is_x = q < plan.circuit.n_data + plan.circuit.n_xanc
        out_x[tr[f][is_x], r, cols[is_x]] ^= 1
        out_z[tr[f][~is_x], r, cols[~is_x]] ^= 1
    g = ~f
    if not g.any():
        return
    tr, loc, pauli, kind = tr[g], loc[g], pauli[g], kind[g]
    first = pauli & 3
    x[tr, plan.q0[loc]] ^= (first & 1).astype(np.uint8)
    z[tr, plan.q0[loc]] ^= (first >> 1).astype(np.uint8)
    two = kind == _KIND_2Q
    if two.any():
        second = pauli[two] >> 2
        x[tr[two], plan.q1[loc[two]]] ^= (second & 1).astype(np.uint8)
        z[tr[two], plan.q1[loc[two]]] ^= (second >> 1).astype(np.uint8)


def simulate(
    circuit: Circuit,
    code: CssCode,
    nm: NoiseModel,
    rounds: int = 10,
    seed: int = 0,
    trial: int = 0,
    initial: PauliOperator | None = None,
) -> SyndromeRecord:
    """One trial of ``rounds`` noisy extraction rounds plus a perfect round."""
    return simulate_batch(circuit, code, nm, rounds, seed, 1, start=trial, initial=initial).record(0)


def fault_locations_per_round(circuit: Circuit) -> int:
    return _plan(circuit).size
