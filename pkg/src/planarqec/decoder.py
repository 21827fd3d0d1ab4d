"""Min-sum belief propagation and small-set-flip decoding over repeated rounds.

X and Z errors are decoded independently. The ``"z"`` side uses the Z checks
(``Hz``) to find X errors and may flip subsets of X-generator supports; the
``"x"`` side is the mirror image.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum

import numba
import numpy as np

from planarqec.codes import CssCode, PauliOperator, is_logical_fast
from planarqec.noise_sim import SyndromeRecord


class DecodeClass(str, Enum):
    SUCCESS = "success"
    LOGICAL_FAILURE = "logical_failure"
    NO_CONVERGENCE = "no_convergence"


@dataclass(frozen=True)
class DecoderConfig:
    """Flat decoder parameter block, serialized into result headers."""

    alpha: float = 0.9  # min-sum normalization
    clamp: float = 25.0  # message magnitude bound
    patience: int = 5
    max_iters: int = 100
    alternation_cap: int = 50
    syndrome_mode: str = "difference"  # or "raw"
    correction_mode: str = "tracked"  # or "applied"
    prior: float | None = None  # overrides 1 - (1-p)^depth when set

    def __post_init__(self):
        if self.syndrome_mode not in ("difference", "raw"):
            raise ValueError(f"unknown syndrome_mode {self.syndrome_mode!r}")
        if self.correction_mode not in ("tracked", "applied"):
            raise ValueError(f"unknown correction_mode {self.correction_mode!r}")
        if self.max_iters < 1 or self.patience < 1 or self.alternation_cap < 1:
            raise ValueError("max_iters, patience and alternation_cap must be positive")
        if not (0 < self.alpha <= 1) or self.clamp <= 0:
            raise ValueError("alpha must be in (0, 1] and clamp positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> DecoderConfig:
        return cls(**d)


@dataclass
class BpState:
    messages: np.ndarray  # check-to-qubit LLRs, one per Tanner edge
    priors: np.ndarray  # per-qubit prior LLRs
    iterations: int
    estimate: np.ndarray
    violated: int

    @property
    def converged(self) -> bool:
        return self.violated == 0


@dataclass
class SsfState:
    syndrome: np.ndarray
    flips: np.ndarray
    steps: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)  # (generator, flipped qubits)

    @property
    def converged(self) -> bool:
        return not self.syndrome.any()


@dataclass(frozen=True)
class DecodeOutcome:
    correction: PauliOperator
    converged: bool
    classification: DecodeClass

    def __post_init__(self):
        if not self.converged and self.classification is not DecodeClass.NO_CONVERGENCE:
            raise ValueError("a non-converged decode must be classified no_convergence")

    @property
    def failed(self) -> bool:
        return self.classification is not DecodeClass.SUCCESS


class _Side:
    """CSR views of one Tanner side plus the generator supports SSF may flip."""

    def __init__(self, h: np.ndarray, gens: np.ndarray):
        h = np.asarray(h, dtype=np.uint8)
        self.h = h
        self.n_checks, self.n = h.shape
        chk, var = np.nonzero(h)  # row-major: edges grouped by check
        self.e_chk = chk.astype(np.int64)
        self.e_var = var.astype(np.int64)
        self.chk_ptr = np.searchsorted(self.e_chk, np.arange(self.n_checks + 1)).astype(np.int64)
        order = np.argsort(self.e_var, kind="stable")
        self.var_edges = order.astype(np.int64)
        self.var_ptr = np.searchsorted(self.e_var[order], np.arange(self.n + 1)).astype(np.int64)
        # qubit -> checks, aligned with var_edges
        self.var_chk = self.e_chk[order]
        supports = [np.flatnonzero(r) for r in np.asarray(gens, dtype=np.uint8)]
        width = max((len(s) for s in supports), default=0)
        if width > 20:
            raise ValueError(f"generator weight {width} is too large for subset enumeration")
        self.gen_sup = np.full((len(supports), max(width, 1)), -1, dtype=np.int64)
        self.gen_len = np.zeros(len(supports), dtype=np.int64)
        for g, s in enumerate(supports):
            self.gen_sup[g, : len(s)] = s
            self.gen_len[g] = len(s)

    def syndrome_of(self, e: np.ndarray) -> np.ndarray:
        return (self.h.astype(np.int64) @ e % 2).astype(np.uint8)


_SIDES: dict[tuple[int, str], tuple[CssCode, _Side]] = {}


def _side(code: CssCode, side: str) -> _Side:
    if side not in ("x", "z"):
        raise ValueError(f"side must be 'x' or 'z', got {side!r}")
    key = (id(code), side)
    hit = _SIDES.get(key)
    if hit is None or hit[0] is not code:
        if side == "z":
            sd = _Side(code.hz.array, code.hx.array)
        else:
            sd = _Side(code.hx.array, code.hz.array)
        _SIDES[key] = (code, sd)
        return sd
    return hit[1]


@numba.njit(cache=True)
def _bp_kernel(e_var, chk_ptr, var_ptr, var_edges, syn, prior, alpha, clamp, max_iters, patience):
    n_edges = e_var.size
    n_chk = chk_ptr.size - 1
    n = var_ptr.size - 1
    v2c = np.empty(n_edges)
    c2v = np.zeros(n_edges)
    for e in range(n_edges):
        v2c[e] = prior[e_var[e]]
    best = np.zeros(n, np.uint8)
    best_count = 0
    for c in range(n_chk):
        best_count += syn[c]
    hard = np.zeros(n, np.uint8)
    iters = 0
    if best_count == 0:
        return best, best_count, iters, c2v
    stale = 0
    while iters < max_iters:
        iters += 1
        # check update (normalized min-sum)
        for c in range(n_chk):
            lo, hi = chk_ptr[c], chk_ptr[c + 1]
            sgn = -1.0 if syn[c] else 1.0
            m1 = np.inf
            m2 = np.inf
            arg = -1
            for e in range(lo, hi):
                v = v2c[e]
                if v < 0:
                    sgn = -sgn
                a = abs(v)
                if a < m1:
                    m2 = m1
                    m1 = a
                    arg = e
                elif a < m2:
                    m2 = a
            for e in range(lo, hi):
                mag = m2 if e == arg else m1
                s = sgn
                if v2c[e] < 0:
                    s = -s
                val = alpha * s * mag
                if val > clamp:
                    val = clamp
                elif val < -clamp:
                    val = -clamp
                c2v[e] = val
        # variable update and hard decision
        for q in range(n):
            total = prior[q]
            for k in range(var_ptr[q], var_ptr[q + 1]):
                total += c2v[var_edges[k]]
            hard[q] = 1 if total < 0 else 0
            for k in range(var_ptr[q], var_ptr[q + 1]):
                e = var_edges[k]
                val = total - c2v[e]
                if val > clamp:
                    val = clamp
                elif val < -clamp:
                    val = -clamp
                v2c[e] = val
        count = 0
        for c in range(n_chk):
            par = syn[c]
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                par ^= hard[e_var[e]]
            count += par
        if count < best_count:
            best_count = count
            best[:] = hard
            stale = 0
        else:
            stale += 1
        if best_count == 0 or stale >= patience:
            break
    return best, best_count, iters, c2v


def prior_llr(q, n: int, clamp: float) -> np.ndarray:
    """Per-qubit log-likelihood ratios log((1-q)/q), clamped to ``clamp``."""
    q = np.broadcast_to(np.asarray(q, dtype=np.float64), (n,))
    with np.errstate(divide="ignore"):
        llr = np.log1p(-q) - np.log(q)
    return np.clip(np.nan_to_num(llr, posinf=clamp, neginf=-clamp), -clamp, clamp)


def bp_pass(
    code: CssCode,
    side: str,
    syndrome: np.ndarray,
    priors,
    max_iters: int | None = None,
    config: DecoderConfig | None = None,
) -> BpState:
    """Min-sum BP until the violated-check count stops improving.

    ``priors`` is a per-qubit error probability (scalar or array). The state
    returned is the best hard decision seen; when no iteration improves on
    the empty correction, the empty correction is returned.
    """
    cfg = config or DecoderConfig()
    sd = _side(code, side)
    syn = np.asarray(syndrome, dtype=np.uint8)
    if syn.shape != (sd.n_checks,):
        raise ValueError(f"syndrome has shape {syn.shape}, expected ({sd.n_checks},)")
    llr = prior_llr(priors, sd.n, cfg.clamp)
    iters = cfg.max_iters if max_iters is None else max_iters
    est, count, it, msgs = _bp_kernel(
        sd.e_var, sd.chk_ptr, sd.var_ptr, sd.var_edges, syn, llr, cfg.alpha, cfg.clamp, iters, cfg.patience
    )
    return BpState(msgs, llr, int(it), est, int(count))


@numba.njit(cache=True)
def _ssf_best_flip(gen_sup, gen_len, var_ptr, var_chk, syn, mark):
    """Best (gain, size) flip over all generator-support subsets.

    Returns (generator, mask, gain); gain 0 means no decreasing flip exists.
    ``mark`` is scratch space over checks, all zero on entry and exit.
    """
    best_g = -1
    best_mask = 0
    best_gain = 0
    best_size = 1
    for g in range(gen_sup.shape[0]):
        w = gen_len[g]
        mask = 0
        gain = 0
        size = 0
        for i in range(1, 1 << w):
            # Gray code: toggle bit b where i has its lowest set bit
            b = 0
            while not (i >> b) & 1:
                b += 1
            q = gen_sup[g, b]
            mask ^= 1 << b
            size += 1 if (mask >> b) & 1 else -1
            for k in range(var_ptr[q], var_ptr[q + 1]):
                c = var_chk[k]
                mark[c] ^= 1
                if (syn[c] ^ mark[c]) == 0:
                    gain += 1
                else:
                    gain -= 1
            if gain <= 0:
                continue
            lhs = gain * best_size
            rhs = best_gain * size
            better = False
            if lhs > rhs:
                better = True
            elif lhs == rhs and best_g >= 0:
                if size < best_size:
                    better = True
                elif size == best_size:
                    # lexicographic on ascending qubit lists
                    ia = 0
                    ib = 0
                    wa = w
                    wb = gen_len[best_g]
                    while True:
                        while ia < wa and not (mask >> ia) & 1:
                            ia += 1
                        while ib < wb and not (best_mask >> ib) & 1:
                            ib += 1
                        if ia >= wa or ib >= wb:
                            break
                        qa = gen_sup[g, ia]
                        qb = gen_sup[best_g, ib]
                        if qa != qb:
                            better = qa < qb
                            break
                        ia += 1
                        ib += 1
            if better:
                best_g = g
                best_mask = mask
                best_gain = gain
                best_size = size
        # undo: the Gray sequence ends at mask = 1 << (w-1); clear remaining marks
        for b in range(w):
            if (mask >> b) & 1:
                q = gen_sup[g, b]
                for k in range(var_ptr[q], var_ptr[q + 1]):
                    mark[var_chk[k]] ^= 1
    return best_g, best_mask, best_gain


def ssf_pass(code: CssCode, side: str, syndrome: np.ndarray, max_steps: int | None = None) -> SsfState:
    """Greedy small-set flip until no subset of a generator support lowers the syndrome weight."""
    sd = _side(code, side)
    syn = np.array(syndrome, dtype=np.uint8)
    if syn.shape != (sd.n_checks,):
        raise ValueError(f"syndrome has shape {syn.shape}, expected ({sd.n_checks},)")
    flips = np.zeros(sd.n, np.uint8)
    mark = np.zeros(sd.n_checks, np.uint8)
    state = SsfState(syn, flips)
    weight = int(syn.sum())
    limit = weight if max_steps is None else max_steps
    while weight and len(state.steps) < limit:
        g, mask, gain = _ssf_best_flip(sd.gen_sup, sd.gen_len, sd.var_ptr, sd.var_chk, syn, mark)
        if gain <= 0:
            break
        qubits = tuple(int(sd.gen_sup[g, b]) for b in range(int(sd.gen_len[g])) if (mask >> b) & 1)
        for q in qubits:
            flips[q] ^= 1
            syn[sd.var_chk[sd.var_ptr[q] : sd.var_ptr[q + 1]]] ^= 1
        new_weight = int(syn.sum())
        assert new_weight == weight - gain and new_weight < weight
        weight = new_weight
        state.steps.append((int(g), qubits))
    return state


def circuit_prior(p: float, depth: int) -> float:
    """Probability that a data qubit picks up a fault during one round of ``depth`` steps."""
    return 1.0 - (1.0 - p) ** depth


def _decode_side(code, side, rounds_syn, final_syn, q, cfg):
    sd = _side(code, side)
    corr = np.zeros(sd.n, np.uint8)
    prev = np.zeros(sd.n_checks, np.uint8)
    last = np.zeros(sd.n, np.uint8)
    applied = cfg.correction_mode == "applied"
    for s_t in rounds_syn:
        s_t = np.asarray(s_t, dtype=np.uint8)
        if applied:
            # outcomes as they would read with every earlier correction applied to the data
            s_t = s_t ^ sd.syndrome_of(corr)
        if cfg.syndrome_mode == "raw":
            target = s_t if applied else s_t ^ sd.syndrome_of(corr)
        elif applied:
            target = s_t ^ prev ^ sd.syndrome_of(last)
        else:
            target = s_t ^ prev
        prev = s_t
        last = np.zeros(sd.n, np.uint8)
        if target.any():
            last = bp_pass(code, side, target, q, config=cfg).estimate
            corr ^= last
    resid = np.asarray(final_syn, dtype=np.uint8) ^ sd.syndrome_of(corr)
    for _ in range(cfg.alternation_cap):
        if not resid.any():
            return corr, True
        before = resid.copy()
        bp = bp_pass(code, side, resid, q, config=cfg)
        corr ^= bp.estimate
        resid = resid ^ sd.syndrome_of(bp.estimate)
        ssf = ssf_pass(code, side, resid)
        corr ^= ssf.flips
        resid = ssf.syndrome
        if ssf.converged:
            return corr, True
        if np.array_equal(resid, before) and not bp.estimate.any() and not ssf.flips.any():
            break  # fixed point: further cycles repeat the same step
    return corr, not resid.any()


def decode_history(
    code: CssCode,
    record: SyndromeRecord,
    p: float,
    config: DecoderConfig | None = None,
    depth: int = 1,
) -> DecodeOutcome:
    """Decode one record: per-round BP, then BP/SSF alternation on the perfect round.

    The per-round BP prior is ``1 - (1-p)^depth`` unless the config overrides
    it. Classification uses the hidden residual frame of the record.
    """
    cfg = config or DecoderConfig()
    q = cfg.prior if cfg.prior is not None else circuit_prior(p, depth)
    cx, ok_x = _decode_side(code, "z", record.z_outcomes, record.final_z, q, cfg)
    cz, ok_z = _decode_side(code, "x", record.x_outcomes, record.final_x, q, cfg)
    correction = PauliOperator(cx, cz)
    if not (ok_x and ok_z):
        return DecodeOutcome(correction, False, DecodeClass.NO_CONVERGENCE)
    net = PauliOperator(record.residual.x ^ cx, record.residual.z ^ cz)
    assert not (code.hz @ net.x).any() and not (code.hx @ net.z).any(), "converged correction leaves a syndrome"
    cls = DecodeClass.LOGICAL_FAILURE if is_logical_fast(code, net) else DecodeClass.SUCCESS
    return DecodeOutcome(correction, True, cls)


def decode_iid(code: CssCode, side: str, syndrome: np.ndarray, p: float, use_bp: bool = True,
               config: DecoderConfig | None = None) -> tuple[np.ndarray, bool]:
    """Single-shot decode of a perfect syndrome (BP/SSF alternation, or SSF alone)."""
    cfg = config or DecoderConfig()
    if use_bp:
        return _decode_side(code, side, [], syndrome, p, cfg)
    st = ssf_pass(code, side, syndrome)
    return st.flips, st.converged


__all__ = [
    "BpState", "DecodeClass", "DecodeOutcome", "DecoderConfig", "SsfState", "bp_pass", "circuit_prior",
    "decode_history", "decode_iid", "prior_llr", "ssf_pass",
]
