"""Acceptance criteria 1-10; each test records one PASS/FAIL line for the terminal summary."""

from collections import Counter

import numpy as np
import pytest
from scipy import stats

from planarqec.circuits import (
    CNOT,
    IDLE,
    Op,
    cardinal_circuit,
    coloration_circuit,
    connectivity_graph,
    verify_measures_stabilizers,
)
from planarqec.codes import hgp, random_biregular, toric_code
from planarqec.harness import (
    ExperimentConfig,
    failure_rate_vs_rounds,
    fit_threshold,
    overhead_table,
    run_experiment,
    threshold_model,
)
from planarqec.layout import (
    VertexOrdering,
    assign_directions,
    cardinal_orderings,
    cycle_ordering,
    find_balanced_ordering,
    lemma_bounds_check,
    planar_decomposition,
)
from planarqec.noise_sim import sample_fault

SUPPRESSION_TRIALS = 100_000
LINEARITY_TRIALS = 20_000


def test_criterion_1_hgp_parameters(hgp_codes, acceptance):
    bad = []
    for s, code in hgp_codes.items():
        orth = not (code.hx @ code.hz.T).array.any()
        if not (code.n == 25 * s * s and code.k == s * s and orth):
            bad.append((s, code.n, code.k, orth))
    acceptance(1, not bad, f"s=2,3,4: n=25s^2, k=s^2, Hx.Hz^T=0 {'hold' if not bad else bad}")


def test_criterion_2_depth_formulas(hgp_codes, acceptance):
    toric = toric_code(5)
    g1, g2 = toric.seed_graphs
    toric_depth = cardinal_circuit(toric, assign_directions(toric, cycle_ordering(g1), cycle_ordering(g2))).depth
    details, ok = [f"toric depth {toric_depth}"], toric_depth == 6
    for s in (2, 4):  # defect 0 needs an even vertex count
        code = hgp_codes[s]
        res = [find_balanced_ordering(g, seed=0, restarts=4) for g in code.seed_graphs]
        dt = assign_directions(code, res[0].ordering, res[1].ordering)
        depth = cardinal_circuit(code, dt).depth
        good = (all(r.defect == 0 for r in res) and depth == dt.degree_sum + 2
                and depth <= 2 * dt.tanner_degree + 2)
        ok &= good
        details.append(f"s={s} defect-0 depth {depth} = {dt.degree_sum}+2 <= 2*{dt.tanner_degree}+2")
    acceptance(2, ok, "; ".join(details))


def test_criterion_3_circuit_oracle(hgp_codes, tiny_hgp, acceptance):
    codes = {"tiny": tiny_hgp, "toric3": toric_code(3), "toric4": toric_code(4), "toric5": toric_code(5)}
    codes.update({f"hgp s={s}": c for s, c in hgp_codes.items() if c.n <= 200})
    failures, checked = [], 0
    for name, code in codes.items():
        o1, o2 = cardinal_orderings(code, seed=0)
        for c in (coloration_circuit(code, "both"), cardinal_circuit(code, assign_directions(code, o1, o2))):
            v = verify_measures_stabilizers(c, code, trials=100)
            checked += 1
            if not v:
                failures.append(f"{name}/{c.kind}: {v.message}")
    acceptance(3, not failures, f"{checked} circuits on {len(codes)} codes with n<=200, failures: {failures or 0}")


def test_criterion_4_planar_layers(cardinal_circuits, acceptance):
    g = connectivity_graph(cardinal_circuits[2])
    layers = planar_decomposition(g, "two_factor", seed=0)
    ok = layers.max_degree == 8 and layers.num_layers <= 4 and all(layers.planar) and layers.covers(g)
    acceptance(4, ok, f"delta={layers.max_degree}, {layers.num_layers} layers, planar={list(layers.planar)}, "
                      f"exact edge partition={layers.covers(g)}")


def test_criterion_5_lemma_bounds(acceptance):
    rng = np.random.default_rng(0)
    violations = 0
    for trial in range(100):
        s1, s2 = rng.integers(1, 4, size=2)
        g1 = random_biregular(int(s1), girth_min=4, seed=trial)
        g2 = random_biregular(int(s2), girth_min=4, seed=1000 + trial)
        code = hgp(g1, g2)
        o1 = VertexOrdering(tuple(rng.permutation(g1.n_vertices)))
        o2 = VertexOrdering(tuple(rng.permutation(g2.n_vertices)))
        lc = lemma_bounds_check(assign_directions(code, o1, o2))
        violations += not (lc.lower_ok and lc.upper_ok)
    tight = []
    for s in (1, 2):
        g = random_biregular(s, bit_degree=4, check_degree=4, girth_min=4, seed=s)
        res = find_balanced_ordering(g, seed=0)
        lc = lemma_bounds_check(assign_directions(hgp(g, g), res.ordering, res.ordering))
        tight.append(res.defect == 0 and lc.degree_sum == lc.tanner_degree)
    acceptance(5, violations == 0 and all(tight),
               f"100 random instances, {violations} bound violations; (4,4) balanced lower bound attained: {tight}")


def test_criterion_6_overhead_table(acceptance):
    rows = overhead_table()
    got = ([r.surface_qubits for r in rows], [r.hgp_qubits for r in rows], [f"{r.ratio:.2f}" for r in rows])
    want = ([387200, 2880000, 13354112], [78400, 313600, 906304], ["4.94", "9.18", "14.73"])
    acceptance(6, got == want, f"surface {got[0]}, HGP {got[1]}, ratios {got[2]}")


def test_criterion_7_fit_round_trip(acceptance):
    true = dict(c1=0.64, c2=1.3, c3=0.21, p_t=2.8e-3)
    rows = [{"p": p, "k": s * s, "pl_round": threshold_model(p, s * s, **true)}
            for s in (4, 6, 8, 10) for p in np.geomspace(4e-4, 2.4e-3, 6)]
    fit = fit_threshold(rows)
    errs = {k: abs(getattr(fit, k) / v - 1) for k, v in true.items()}
    acceptance(7, max(errs.values()) < 0.01,
               "max relative error " + ", ".join(f"{k}={e:.1e}" for k, e in errs.items()))


@pytest.mark.slow
def test_criterion_8_error_suppression(hgp_codes, cardinal_circuits, acceptance):
    rows = {}
    for s in (2, 3):
        cfg = ExperimentConfig(p=(5e-4,), trials=SUPPRESSION_TRIALS, rounds=10, s=s, seed=0)
        rows[s] = run_experiment(cfg, code=hgp_codes[s], circuit=cardinal_circuits[s])[0]
    small, large = rows[2], rows[3]
    ok = large["pl_round"] < small["pl_round"] and large["ci_hi"] < small["ci_lo"]
    acceptance(8, ok, (f"p=5e-4, T=10, {SUPPRESSION_TRIALS} trials: s=2 {small['pl_round']:.5f} "
                       f"[{small['ci_lo']:.5f}, {small['ci_hi']:.5f}], s=3 {large['pl_round']:.5f} "
                       f"[{large['ci_lo']:.5f}, {large['ci_hi']:.5f}] per round"))


@pytest.mark.slow
def test_criterion_9_round_linearity(hgp_codes, cardinal_circuits, acceptance):
    cfg = ExperimentConfig(p=(1e-3,), trials=LINEARITY_TRIALS, s=2, seed=0)
    sweep = failure_rate_vs_rounds(cfg, range(2, 13), tail_from=6, code=hgp_codes[2], circuit=cardinal_circuits[2])
    incs = ", ".join(f"{x:.4f}" for x in sweep.increments)
    acceptance(9, sweep.increments_consistent,
               f"s=2, p=1e-3, {LINEARITY_TRIALS} trials: tail slope {sweep.slope:.4f} +- {sweep.slope_stderr:.4f}, "
               f"increments T>=6 [{incs}]")


def test_criterion_10_fault_distributions(acceptance):
    rng = np.random.default_rng(0)
    results = []
    for op, n_out in ((Op(IDLE, (0,)), 3), (Op(CNOT, (0, 1)), 15)):
        counts = Counter(sample_fault(op, 1.0, rng) for _ in range(100_000))
        pval = stats.chisquare(list(counts.values())).pvalue if len(counts) == n_out else 0.0
        results.append((n_out, pval))
    acceptance(10, all(pv > 0.01 for _, pv in results),
               "p=1, 10^5 samples: " + ", ".join(f"{n} outcomes chi2 p-value {pv:.3f}" for n, pv in results))
