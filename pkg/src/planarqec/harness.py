"""Experiment orchestration: Monte Carlo runs, confidence intervals, threshold fits and overhead tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from planarqec.circuits import Circuit, cardinal_circuit, coloration_circuit, verify_measures_stabilizers
from planarqec.codes import CssCode, generate_hgp_code, toric_code
from planarqec.decoder import DecoderConfig, decode_history
from planarqec.layout import assign_directions, cardinal_orderings
from planarqec.noise_sim import NoiseModel, simulate_batch

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("s", "n", "k", "p", "trials", "failures", "pl_T", "pl_round", "ci_lo", "ci_hi")
CONFIG_PREFIX = "# config: "


# ---------------------------------------------------------------- statistics


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = stats.norm.ppf(0.5 + confidence / 2)
    phat = failures / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == trials else min(1.0, centre + half)
    return float(lo), float(hi)


def per_round_estimate(pl_T: float, rounds: int) -> float:
    """``P_L(T) / T``; an upper bound on the per-round increment when ``P_L(T) = c + qT`` with ``c >= 0``."""
    return pl_T / rounds


# ------------------------------------------------------------- experiments


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one results table.

    The code is either an HGP sample (``s``, ``code_seed``, ``samples``,
    ``girth_min``), a toric code (``toric_d``) or a saved ``code_file``.
    """

    p: tuple[float, ...] = (1e-3,)
    trials: int = 1000
    rounds: int = 10
    seed: int = 0
    s: int | None = None
    code_seed: int = 0
    samples: int = 1
    girth_min: int = 8
    toric_d: int | None = None
    code_file: str | None = None
    circuit: str = "cardinal"  # or "coloration"
    ordering_seed: int = 0
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    batch: int = 2000
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in np.atleast_1d(self.p)))
        if isinstance(self.decoder, dict):
            object.__setattr__(self, "decoder", DecoderConfig.from_dict(self.decoder))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        for x in self.p:
            if not 0.0 <= x < 1.0:
                raise ValueError(f"p must be in [0, 1), got {x}")
        if sum(v is not None for v in (self.s, self.toric_d, self.code_file)) != 1:
            raise ValueError("specify exactly one of s, toric_d, code_file")
        if self.circuit not in ("cardinal", "coloration"):
            raise ValueError(f"unknown circuit kind {self.circuit!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = list(self.p)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def build_code(cfg: ExperimentConfig) -> CssCode:
    if cfg.code_file is not None:
        return CssCode.load(cfg.code_file)
    if cfg.toric_d is not None:
        return toric_code(cfg.toric_d)
    return generate_hgp_code(cfg.s, seed=cfg.code_seed, girth_min=cfg.girth_min, samples=cfg.samples)


def build_circuit(code: CssCode, kind: str = "cardinal", seed: int = 0, verify: bool = True) -> Circuit:
    """Syndrome-extraction circuit for ``code``; raises if the oracle rejects it."""
    if kind == "cardinal":
        o1, o2 = cardinal_orderings(code, seed=seed)
        c = cardinal_circuit(code, assign_directions(code, o1, o2))
    elif kind == "coloration":
        c = coloration_circuit(code, "both")
    else:
        raise ValueError(f"unknown circuit kind {kind!r}")
    if verify:
        check = verify_measures_stabilizers(c, code)
        if not check:
            raise RuntimeError(f"{kind} circuit does not measure the stabilizers: {check.message}")
    return c


def run_trials(
    code: CssCode,
    circuit: Circuit,
    p: float,
    rounds: int,
    seed: int,
    start: int,
    count: int,
    decoder: DecoderConfig | None = None,
    batch: int = 2000,
) -> np.ndarray:
    """Failure flag of trials ``start .. start + count - 1`` (simulation then decoding)."""
    decoder = decoder or DecoderConfig()
    nm = NoiseModel(p)
    failed = np.zeros(count, dtype=bool)
    for lo in range(0, count, batch):
        size = min(batch, count - lo)
        b = simulate_batch(circuit, code, nm, rounds, seed, size, start=start + lo)
        for i in range(size):
            failed[lo + i] = decode_history(code, b.record(i), p, decoder, depth=circuit.depth).failed
    return failed


def _code_s(code: CssCode) -> int | str:
    return code.metadata.get("s", "") if code.metadata else ""


def _point_failures(args) -> int:
    code, circuit, p, rounds, seed, start, count, decoder, batch = args
    return int(run_trials(code, circuit, p, rounds, seed, start, count, decoder, batch).sum())


def _count_failures(cfg: ExperimentConfig, code, circuit, p: float, rounds: int) -> int:
    if cfg.workers <= 1:
        return int(run_trials(code, circuit, p, rounds, cfg.seed, 0, cfg.trials, cfg.decoder, cfg.batch).sum())
    # trials are split by index; each chunk regenerates its own per-trial streams
    step = math.ceil(cfg.trials / cfg.workers)
    jobs = [
        (code, circuit, p, rounds, cfg.seed, lo, min(step, cfg.trials - lo), cfg.decoder, cfg.batch)
        for lo in range(0, cfg.trials, step)
    ]
    with ProcessPoolExecutor(cfg.workers) as pool:
        return sum(pool.map(_point_failures, jobs))


def result_row(code: CssCode, p: float, trials: int, failures: int, rounds: int) -> dict:
    pl = failures / trials
    lo, hi = wilson_interval(failures, trials)
    return {
        "s": _code_s(code), "n": code.n, "k": code.k, "p": p, "trials": trials, "failures": failures,
        "pl_T": pl, "pl_round": per_round_estimate(pl, rounds),
        "ci_lo": per_round_estimate(lo, rounds), "ci_hi": per_round_estimate(hi, rounds),
    }


def run_experiment(cfg: ExperimentConfig, code: CssCode | None = None, circuit: Circuit | None = None) -> list[dict]:
    """Failure counts per physical rate; writes ``cfg.out`` as CSV when set.

    ``ci_lo``/``ci_hi`` are the Wilson 95% bounds on ``P_L(T)`` divided by ``T``.
    """
    code = code if code is not None else build_code(cfg)
    circuit = circuit if circuit is not None else build_circuit(code, cfg.circuit, cfg.ordering_seed)
    rows = []
    for p in cfg.p:
        failures = _count_failures(cfg, code, circuit, p, cfg.rounds)
        rows.append(result_row(code, p, cfg.trials, failures, cfg.rounds))
        log.info("p=%g: %d/%d failures", p, failures, cfg.trials)
    if cfg.out:
        write_results(cfg.out, cfg, rows)
    return rows


def write_results(path: str | Path, cfg: ExperimentConfig | dict, rows: Sequence[dict], columns=RESULT_COLUMNS) -> None:
    Path(path).write_text(format_results(cfg, rows, columns))


def format_results(cfg: ExperimentConfig | dict, rows: Sequence[dict], columns=RESULT_COLUMNS) -> str:
    header = cfg.to_dict() if isinstance(cfg, ExperimentConfig) else cfg
    buf = io.StringIO()
    buf.write(CONFIG_PREFIX + json.dumps(header, sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: r[c] for c in columns})
    return buf.getvalue()


def read_results(path: str | Path) -> tuple[dict, list[dict]]:
    """Config header and rows (numeric fields converted) of a results CSV."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(CONFIG_PREFIX):
        raise ValueError(f"{path}: missing config header line")
    cfg = json.loads(lines[0][len(CONFIG_PREFIX):])
    rows = []
    for r in csv.DictReader(lines[1:]):
        rows.append({k: _num(v) for k, v in r.items()})
    return cfg, rows


def _num(v: str):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v


# --------------------------------------------------------- rounds linearity


@dataclass(frozen=True)
class RoundsSweep:
    rows: list[dict]
    tail_from: int
    slope: float
    slope_stderr: float
    increments: list[float]
    increments_consistent: bool  # every tail increment within 3 sigma of the slope


def failure_rate_vs_rounds(
    cfg: ExperimentConfig,
    rounds_list: Iterable[int],
    tail_from: int = 6,
    code: CssCode | None = None,
    circuit: Circuit | None = None,
) -> RoundsSweep:
    """``P_L(T)`` for each ``T`` on a common trial population, and the tail slope.

    The same trial indices and seeds are reused for every ``T``; each trial's
    fault stream for ``T`` rounds is a prefix of its stream for longer runs.
    The slope is a weighted least-squares fit of ``P_L(T)`` over ``T >= tail_from``.
    """
    if len(cfg.p) != 1:
        raise ValueError("a rounds sweep uses a single physical rate")
    p = cfg.p[0]
    code = code if code is not None else build_code(cfg)
    circuit = circuit if circuit is not None else build_circuit(code, cfg.circuit, cfg.ordering_seed)
    rows = []
    for T in sorted(set(int(t) for t in rounds_list)):
        failures = _count_failures(cfg, code, circuit, p, T)
        row = result_row(code, p, cfg.trials, failures, T)
        row["rounds"] = T
        rows.append(row)
    tail = [r for r in rows if r["rounds"] >= tail_from]
    slope, err = float("nan"), float("nan")
    increments: list[float] = []
    consistent = True
    if len(tail) >= 2:
        T = np.array([r["rounds"] for r in tail], float)
        y = np.array([r["pl_T"] for r in tail])
        var = np.maximum(y * (1 - y), 1.0 / cfg.trials) / cfg.trials
        w = 1 / var
        A = np.vstack([np.ones_like(T), T]).T
        cov = np.linalg.inv(A.T @ (A * w[:, None]))
        beta = cov @ (A.T @ (w * y))
        slope, err = float(beta[1]), float(math.sqrt(cov[1, 1]))
        for a, b in zip(tail, tail[1:]):
            dT = b["rounds"] - a["rounds"]
            inc = (b["pl_T"] - a["pl_T"]) / dT
            increments.append(inc)
            # paired population: the difference of two counts has variance at most the sum
            sd = math.sqrt(
                max(a["pl_T"] * (1 - a["pl_T"]), 1 / cfg.trials) / cfg.trials
                + max(b["pl_T"] * (1 - b["pl_T"]), 1 / cfg.trials) / cfg.trials
            ) / dT
            if abs(inc - slope) > 3 * math.hypot(sd, err):
                consistent = False
    if cfg.out:
        cols = ("rounds",) + RESULT_COLUMNS
        write_results(cfg.out, cfg, rows, cols)
    return RoundsSweep(rows, tail_from, slope, err, increments, consistent)


# ---------------------------------------------------------------- threshold


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitResult:
    p_t: float
    c1: float
    c2: float
    c3: float
    covariance: np.ndarray  # over (log c1, c2, c3, log p_t)
    residuals: np.ndarray  # log-space residuals per row
    cost: float
    message: str = ""

    def __post_init__(self):
        if not self.p_t > 0:
            raise FitError(f"non-positive threshold {self.p_t}")

    def predict(self, p, k):
        return threshold_model(p, k, self.c1, self.c2, self.c3, self.p_t)

    def to_dict(self) -> dict:
        return {
            "p_t": self.p_t, "c1": self.c1, "c2": self.c2, "c3": self.c3,
            "covariance": np.asarray(self.covariance).tolist(),
            "residuals": np.asarray(self.residuals).tolist(), "cost": self.cost, "message": self.message,
        }


def threshold_model(p, k, c1, c2, c3, p_t):
    """``c1 (p / p_t) ** (c2 k ** c3)``."""
    p, k = np.asarray(p, float), np.asarray(k, float)
    return c1 * (p / p_t) ** (c2 * k**c3)


def fit_threshold(rows: Iterable[dict], init: Sequence[float] | None = None) -> FitResult:
    """Least-squares fit of ``log P_L = log c1 + c2 k^c3 log(p / p_t)``.

    Rows need ``p``, ``k`` and ``pl_round`` (or ``pl``). Rows with zero
    failure rate carry no information in log space and are dropped.
    """
    pts = []
    for r in rows:
        pl = r.get("pl_round", r.get("pl"))
        if pl is None:
            raise ValueError("rows need a 'pl_round' or 'pl' field")
        if pl > 0:
            pts.append((float(r["p"]), float(r["k"]), float(pl)))
    if not pts:
        raise FitError("no rows with a positive failure rate")
    p, k, pl = map(np.array, zip(*pts))
    if len(set(k)) < 2:
        raise FitError(f"need at least 2 code sizes, got k={sorted(set(k))}: c3 is not identifiable")
    for kv in set(k):
        if len(set(p[k == kv])) < 3:
            raise FitError(f"code size k={kv:g} has fewer than 3 distinct p values")
    c1, c2, c3, pt = init if init is not None else (0.64, 1.0, 0.2, float(p.max()))
    x0 = np.array([math.log(c1), c2, c3, math.log(pt)])
    logp, logk, logpl = np.log(p), np.log(k), np.log(pl)

    def resid(x):
        return x[0] + x[1] * np.exp(x[2] * logk) * (logp - x[3]) - logpl

    def jac(x):
        ek = np.exp(x[2] * logk)
        d = logp - x[3]
        return np.column_stack([np.ones_like(d), ek * d, x[1] * ek * logk * d, -x[1] * ek])

    res = optimize.least_squares(
        resid, x0, jac=jac, bounds=([-np.inf, 1e-9, 0.0, -np.inf], [np.inf, np.inf, 5.0, 0.0]),
        x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=20000,
    )
    if not res.success or not np.all(np.isfinite(res.x)):
        raise FitError(f"fit did not converge: {res.message}; last x={res.x.tolist()}, cost={res.cost}")
    J = res.jac
    dof = max(len(pl) - 4, 1)
    s2 = 2 * res.cost / dof
    jtj = J.T @ J
    if np.linalg.matrix_rank(jtj) < 4:
        raise FitError(f"singular Jacobian at x={res.x.tolist()}: parameters not identifiable")
    cov = np.linalg.pinv(jtj) * s2
    return FitResult(
        p_t=float(math.exp(res.x[3])), c1=float(math.exp(res.x[0])), c2=float(res.x[1]), c3=float(res.x[2]),
        covariance=cov, residuals=res.fun, cost=float(res.cost), message=str(res.message),
    )


# ----------------------------------------------------------------- overhead


@dataclass(frozen=True)
class OverheadConfig:
    """Constants of the qubit-overhead comparison (defaults give the reference table)."""

    targets: tuple[float, ...] = (1e-9, 1e-12, 1e-15)
    p: float = 1e-4
    a: float = 0.03  # surface-code prefactor
    pt_surface: float = 0.011
    c1: float = 0.64
    c2: float = 1.3
    c3: float = 0.21
    pt_hgp: float = 2.8e-3
    hgp_qubits_per_logical: int = 49
    # the surface failure formula is evaluated at k_eff = surface_k_factor * k;
    # 24 (ancillas per logical qubit of the HGP block) reproduces the reference table
    surface_k_factor: float = 24.0
    max_s: int = 100_000

    def __post_init__(self):
        if not self.a > 0 or not self.surface_k_factor > 0:
            raise ValueError("a and surface_k_factor must be positive")
        if not 0 < self.p < self.pt_surface:
            raise ValueError("need 0 < p < surface threshold")
        if not 0 < self.p < self.pt_hgp:
            raise ValueError("need 0 < p < HGP threshold")
        for t in self.targets:
            if not 0 < t < self.c1:
                raise ValueError(f"target {t} must lie in (0, c1)")


@dataclass(frozen=True)
class OverheadRow:
    target: float
    s: int
    k: int
    hgp_qubits: int
    d: int
    surface_qubits: int
    ratio: float


def _hgp_size(oc: OverheadConfig, target: float) -> int:
    for s in range(1, oc.max_s + 1):
        if oc.c1 * (oc.p / oc.pt_hgp) ** (oc.c2 * (s * s) ** oc.c3) <= target:
            return s
    raise ValueError(f"no s <= {oc.max_s} reaches target {target}")


def _surface_distance(oc: OverheadConfig, k: int, target: float) -> int:
    d = 1
    while oc.a * oc.surface_k_factor * k * (oc.p / oc.pt_surface) ** ((d + 1) / 2) > target:
        d += 2
    return d


def overhead_table(oc: OverheadConfig | None = None) -> list[OverheadRow]:
    """HGP vs surface-code qubit counts for the same number of logical qubits."""
    oc = oc or OverheadConfig()
    rows = []
    for t in oc.targets:
        s = _hgp_size(oc, t)
        k = s * s
        d = _surface_distance(oc, k, t)
        hq = oc.hgp_qubits_per_logical * k
        sq = 2 * d * d * k
        rows.append(OverheadRow(t, s, k, hq, d, sq, round(sq / hq, 2)))
    return rows


def format_table(rows: Sequence[OverheadRow]) -> str:
    out = [
        "| target P_L | k | surface d | surface qubits | HGP s | HGP qubits | improvement |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        out.append(f"| {r.target:.0e} | {r.k} | {r.d} | {r.surface_qubits} | {r.s} | {r.hgp_qubits} | {r.ratio:.2f} |")
    return "\n".join(out)
