import itertools
import math

import numpy as np
import pytest

from planarqec.codes import (
    BipartiteGraph,
    BudgetExhaustedError,
    Classification,
    CssCode,
    PauliOperator,
    check_hgp_parameters,
    classify,
    cycle_graph,
    generate_hgp_code,
    girth,
    hgp,
    is_logical_fast,
    random_biregular,
    single_edge,
    stabilizer_group_element,
    syndrome,
    toric_code,
)
from planarqec.gf2 import Gf2Matrix


def brute_girth(g: BipartiteGraph) -> float:
    """Shortest cycle by enumerating simple cycles of increasing length (small graphs only)."""
    import networkx as nx

    G = nx.Graph(g.vertex_edges())
    cycles = nx.minimum_cycle_basis(G)
    return min((len(c) for c in cycles), default=math.inf)


def commute(code: CssCode) -> bool:
    return not (code.hx.array.astype(int) @ code.hz.array.T.astype(int) % 2).any()


# ------------------------------------------------------------------ graphs


def test_girth_examples():
    assert girth(single_edge()) == math.inf
    four_cycle = BipartiteGraph(2, 2, ((0, 0), (0, 1), (1, 0), (1, 1)))
    assert girth(four_cycle) == 4
    k43 = BipartiteGraph(4, 3, tuple(itertools.product(range(4), range(3))))
    assert girth(k43) == 4
    assert girth(cycle_graph(5)) == 10


def test_rejects_parallel_edges():
    with pytest.raises(ValueError):
        BipartiteGraph(1, 1, ((0, 0), (0, 0)))
    with pytest.raises(ValueError):
        BipartiteGraph(1, 1, ((0, 1),))


def test_random_biregular_small():
    g = random_biregular(1, girth_min=4, seed=0)
    assert (g.n_bits, g.n_checks, len(g.edges)) == (4, 3, 12)
    assert all(d == 3 for d in g.degrees[:4]) and all(d == 4 for d in g.degrees[4:])


def test_random_biregular_s1_girth8_exhausts_budget():
    with pytest.raises(BudgetExhaustedError):
        random_biregular(1, girth_min=8, seed=0, attempt_budget=3)


def test_random_biregular_deterministic():
    a = random_biregular(3, girth_min=6, seed=11)
    b = random_biregular(3, girth_min=6, seed=11)
    assert a.edges == b.edges


@pytest.mark.parametrize("s,gmin,seed", [(2, 4, 0), (2, 4, 5), (3, 6, 1), (4, 6, 2), (5, 6, 3)])
def test_random_biregular_properties(s, gmin, seed):
    g = random_biregular(s, girth_min=gmin, seed=seed)
    assert len(set(g.edges)) == len(g.edges)
    assert g.degrees == [3] * (4 * s) + [4] * (3 * s)
    assert girth(g) >= gmin
    assert girth(g) == brute_girth(g)


def test_girth8_reachable_at_moderate_size():
    g = random_biregular(15, girth_min=8, seed=0)
    assert girth(g) >= 8


def test_graph_roundtrip():
    g = random_biregular(2, girth_min=4, seed=0)
    assert BipartiteGraph.from_dict(g.to_dict()) == g
    assert BipartiteGraph.from_matrix(g.parity_check_matrix()) == g


# -------------------------------------------------------------------- HGP


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_toric_parameters(d):
    code = toric_code(d)
    assert code.n == 2 * d * d
    assert code.k == 2
    assert commute(code)


def test_single_edge_product():
    code = hgp(single_edge(), single_edge())
    assert code.n == 2 and code.k == 0
    assert code.hx.array.tolist() == [[1, 1]]
    assert code.hz.array.tolist() == [[1, 1]]


@pytest.mark.parametrize("s", [2, 3, 4])
def test_hgp_parameters(hgp_codes, s):
    code = hgp_codes[s]
    assert (code.n, code.k) == (25 * s * s, s * s)
    assert check_hgp_parameters(code, s) == []
    assert commute(code)
    # no idle qubit
    assert code.hx.array.any(axis=0).all() or code.hz.array.any(axis=0).all()
    assert (code.hx.array.any(axis=0) | code.hz.array.any(axis=0)).all()
    assert code.k == code.n - code.hx.rank() - code.hz.rank()


def test_hgp_from_generic_graphs_commute():
    rng = np.random.default_rng(3)
    for _ in range(20):
        h1 = rng.integers(0, 2, size=(3, 5))
        h2 = rng.integers(0, 2, size=(4, 4))
        if not h1.any() or not h2.any():
            continue
        code = hgp(BipartiteGraph.from_matrix(h1), BipartiteGraph.from_matrix(h2))
        assert commute(code)
        # k of an HGP code from the classical kernels: k1 k2 + k1T k2T
        k1 = 5 - Gf2Matrix(h1).rank()
        k2 = 4 - Gf2Matrix(h2).rank()
        k1t = 3 - Gf2Matrix(h1).rank()
        k2t = 4 - Gf2Matrix(h2).rank()
        assert code.k == k1 * k2 + k1t * k2t


def test_rank_deficient_report():
    code = hgp(cycle_graph(3), cycle_graph(3))
    problems = check_hgp_parameters(code, 1)
    assert problems  # 18 qubits, k=2 differs from 25, 1


def test_generate_with_ranking_is_deterministic():
    a = generate_hgp_code(2, seed=4, girth_min=4, samples=3, rank_trials=30)
    b = generate_hgp_code(2, seed=4, girth_min=4, samples=3, rank_trials=30)
    assert a.hx == b.hx and a.hz == b.hz
    assert a.metadata["chosen_sample"] in range(3)
    assert a.metadata["ranking_failures"] >= 0


def test_code_json_roundtrip(tmp_path, hgp_codes):
    code = hgp_codes[2]
    path = tmp_path / "code.json"
    code.save(path)
    back = CssCode.load(path)
    assert back.hx == code.hx and back.hz == code.hz
    assert back.k == code.k and back.seed_graphs == code.seed_graphs


def test_noncommuting_rejected():
    with pytest.raises(ValueError):
        CssCode(Gf2Matrix([[1, 0]]), Gf2Matrix([[1, 1]]))


# ---------------------------------------------------- syndromes and classes


def test_syndrome_examples(toric3):
    n = toric3.n
    sx, sz = syndrome(toric3, PauliOperator.identity(n))
    assert not sx.any() and not sz.any()
    for q in range(n):
        sx, _ = syndrome(toric3, PauliOperator.single(n, q, "Z"))
        assert sx.tolist() == toric3.hx.array[:, q].tolist()
    for row in toric3.hz.array:
        sx, _ = syndrome(toric3, PauliOperator(np.zeros(n, np.uint8), row))
        assert not sx.any()
    with pytest.raises(ValueError):
        syndrome(toric3, PauliOperator.identity(n + 1))


def test_classify_examples(toric3):
    n = toric3.n
    assert classify(toric3, PauliOperator.identity(n)) is Classification.STABILIZER
    assert classify(toric3, PauliOperator.single(n, 0, "X")) is Classification.DETECTABLE
    # Z on every qubit (i0, j), j in B2: a non-contractible loop
    z = np.zeros(n, np.uint8)
    for q, (i, j) in enumerate(toric3.qubit_labels):
        if i == 0 and j < 3:
            z[q] = 1
    loop = PauliOperator(np.zeros(n, np.uint8), z)
    assert classify(toric3, loop) is Classification.LOGICAL
    assert is_logical_fast(toric3, loop)


@pytest.mark.parametrize("which", ["toric3", "s2"])
def test_classify_coset_invariance(which, toric3, hgp_codes):
    code = toric3 if which == "toric3" else hgp_codes[2]
    rng = np.random.default_rng(0)
    n = code.n
    for _ in range(1000):
        e = PauliOperator(
            (rng.random(n) < 0.1).astype(np.uint8), (rng.random(n) < 0.1).astype(np.uint8)
        )
        if rng.random() < 0.5:
            # push toward syndrome-free operators so all classes are exercised
            lx = code.logical_x[rng.integers(len(code.logical_x))]
            e = PauliOperator(lx.astype(np.uint8), np.zeros(n, np.uint8))
        stab = stabilizer_group_element(
            code, np.flatnonzero(rng.random(code.r_x) < 0.3), np.flatnonzero(rng.random(code.r_z) < 0.3)
        )
        c = classify(code, e)
        assert classify(code, e * stab) is c
        if c is not Classification.DETECTABLE:
            assert is_logical_fast(code, e) == (c is Classification.LOGICAL)


def test_logical_bases(hgp_codes):
    code = hgp_codes[3]
    lx, lz = code.logical_x, code.logical_z
    assert lx.shape == (code.k, code.n) and lz.shape == (code.k, code.n)
    assert not (code.hz.array.astype(int) @ lx.T.astype(int) % 2).any()
    assert not (code.hx.array.astype(int) @ lz.T.astype(int) % 2).any()
    # symplectic pairing has full rank
    assert Gf2Matrix(lx.astype(int) @ lz.T.astype(int) % 2).rank() == code.k


def test_pauli_operator():
    a = PauliOperator.single(3, 1, "Y")
    assert a.weight == 1 and a.x.tolist() == [0, 1, 0] and a.z.tolist() == [0, 1, 0]
    b = PauliOperator.single(3, 1, "X")
    assert (a * b) == PauliOperator.single(3, 1, "Z")
    with pytest.raises(ValueError):
        PauliOperator(np.zeros(2, np.uint8), np.zeros(3, np.uint8))
