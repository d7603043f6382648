import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from l2torsion import hilbert_complex as hc
from l2torsion import vn_core as vn
from l2torsion.vn_core import EquivariantOperator, GroupSpec

Z = GroupSpec.integers()
FINITE = [GroupSpec.trivial(), GroupSpec.cyclic(2), GroupSpec.cyclic(3),
          GroupSpec.from_table([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])]
seeds = st.integers(0, 2**32 - 1)


def dense_twisted(C, k):
    """Regular-representation matrix of h_{k+1}^{1/2} c^k h_k^{-1/2}, built with sqrtm."""
    G = C.group
    c = vn.realize(C.differential(k))

    def root(j, power):
        h = scipy.linalg.sqrtm(C.metric(j))
        if power < 0:
            h = np.linalg.inv(h)
        return vn.realize(EquivariantOperator.from_matrix(G, h, C.ranks[j], C.ranks[j],
                                                          C.fiber_dim))
    return root(k + 1, 1) @ c @ root(k, -1)


def dense_laplacian_torsion(C):
    """Ray-Singer form: (1/2) sum (-1)^(k+1) k log det' Delta_k."""
    n = len(C.ranks)
    mats = [dense_twisted(C, k) for k in range(n - 1)]
    total = 0.0
    for k in range(n):
        size = C.ranks[k] * C.fiber_dim * C.group.size
        lap = np.zeros((size, size), dtype=complex)
        if k < n - 1:
            lap += mats[k].conj().T @ mats[k]
        if k >= 1:
            lap += mats[k - 1] @ mats[k - 1].conj().T
        if size == 0:
            continue
        ev = np.linalg.eigvalsh(lap)
        keep = ev[ev > 1e-10 * max(ev.max(), 1e-300)]
        total += 0.5 * (-1) ** (k + 1) * k * np.sum(np.log(keep)) / C.group.size
    return total


def dense_betti(C):
    n = len(C.ranks)
    mats = [dense_twisted(C, k) for k in range(n - 1)]
    out = []
    for k in range(n):
        size = C.ranks[k] * C.fiber_dim * C.group.size
        rk_out = np.linalg.matrix_rank(mats[k], tol=1e-9) if k < n - 1 and size else 0
        rk_in = np.linalg.matrix_rank(mats[k - 1], tol=1e-9) if k >= 1 and mats[k - 1].size else 0
        out.append((size - rk_out - rk_in) / C.group.size)
    return out


def two_term(group, mat, d=1):
    m = np.atleast_2d(mat)
    r = m.shape[0] // d
    c = EquivariantOperator.from_matrix(group, m, r, r, d)
    return hc.HilbertComplex(group, d, [r, r], [c])


# -- basic complexes

def test_identity_complex():
    C = two_term(GroupSpec.trivial(), np.eye(2))
    assert hc.log_l2_torsion(C).log_torsion == pytest.approx(0.0, abs=1e-14)
    assert hc.betti_numbers(C) == [0.0, 0.0]


def test_zero_differential_complex():
    G = GroupSpec.cyclic(3)
    C = hc.HilbertComplex(G, 1, [2, 1, 3], [EquivariantOperator.zero(G, 1, 2),
                                            EquivariantOperator.zero(G, 3, 1)])
    assert hc.l2_torsion(C) == 1.0
    assert hc.betti_numbers(C) == pytest.approx([2.0, 1.0, 3.0])


def test_scalar_complex_torsion():
    C = two_term(GroupSpec.trivial(), [[3.0]])
    assert hc.log_l2_torsion(C).log_torsion == pytest.approx(math.log(3.0))


def test_circle_complex_with_holonomy_two():
    # Mahler measure of z - 2 is 2
    C = hc.HilbertComplex(Z, 1, [1, 1], [EquivariantOperator.laurent({1: 1.0, 0: -2.0})])
    assert hc.log_l2_torsion(C).log_torsion == pytest.approx(math.log(2.0), abs=1e-8)


def test_circle_complex_trivial_holonomy_is_l2_acyclic():
    C = hc.HilbertComplex(Z, 1, [1, 1], [EquivariantOperator.laurent({1: 1.0, 0: -1.0})])
    assert hc.betti_numbers(C) == pytest.approx([0.0, 0.0], abs=1e-12)
    assert hc.log_l2_torsion(C).log_torsion == pytest.approx(0.0, abs=1e-6)


def test_euler_characteristic_is_vn_dimension_sum():
    C = hc.HilbertComplex(GroupSpec.integers(3), 2, [1, 2, 1], [])
    assert C.euler_characteristic() == pytest.approx((1 - 2 + 1) * 2 / 3)


def test_differential_outside_range_is_zero():
    C = two_term(GroupSpec.trivial(), [[1.0]])
    assert C.differential(5).max_abs() == 0.0


# -- validation

def test_validate_accepts_good_complex(rng):
    assert hc.validate(hc.random_complex(rng, GroupSpec.cyclic(3))) == []


def test_validate_flags_nonzero_square():
    G = GroupSpec.trivial()
    one = EquivariantOperator.from_matrix(G, [[1.0]], 1, 1)
    C = hc.HilbertComplex(G, 1, [1, 1, 1], [one, one])
    assert any("!= 0" in e for e in hc.validate(C))


def test_validate_flags_shape_mismatch():
    G = GroupSpec.trivial()
    C = hc.HilbertComplex(G, 1, [1, 2], [EquivariantOperator.from_matrix(G, [[1.0]], 1, 1)])
    assert hc.validate(C)


def test_validate_flags_indefinite_metric():
    C = hc.HilbertComplex(GroupSpec.trivial(), 1, [1, 1],
                          [EquivariantOperator.from_matrix(GroupSpec.trivial(), [[1.0]], 1, 1)],
                          [np.array([[-1.0]]), None])
    assert any("positive definite" in e for e in hc.validate(C))


def test_twist_metric_rejects_bad_metric():
    C = two_term(GroupSpec.trivial(), [[1.0]])
    with pytest.raises(ValueError):
        hc.twist_metric(C, [np.array([[0.0]]), None])


# -- against dense oracles

@given(seeds, st.sampled_from(FINITE))
def test_betti_against_dense_ranks(seed, G):
    C = hc.random_complex(np.random.default_rng(seed), G)
    assert hc.betti_numbers(C) == pytest.approx(dense_betti(C), abs=1e-9)


@given(seeds, st.sampled_from(FINITE))
def test_torsion_against_laplacian_form(seed, G):
    C = hc.random_complex(np.random.default_rng(seed), G)
    assert hc.log_l2_torsion(C).log_torsion == pytest.approx(dense_laplacian_torsion(C), abs=1e-9)


@given(seeds)
def test_betti_sum_gives_euler_characteristic(seed):
    C = hc.random_complex(np.random.default_rng(seed), GroupSpec.cyclic(2))
    b = hc.betti_numbers(C)
    assert sum((-1) ** k * v for k, v in enumerate(b)) == pytest.approx(C.euler_characteristic())


@given(seeds, st.lists(st.floats(0.1, 10.0), min_size=3, max_size=3))
def test_scalar_metric_rescaling(seed, lambdas):
    # h_k = lambda_k I shifts log det c^k by (1/2) rank(c^k) log(lambda_{k+1} / lambda_k)
    rng = np.random.default_rng(seed)
    C = hc.random_complex(rng, GroupSpec.cyclic(3), degrees=3, metrics=False)
    mets = [lam * np.eye(m * C.fiber_dim) if m else None for lam, m in zip(lambdas, C.ranks)]
    D = hc.twist_metric(C, mets)
    shift = 0.0
    for k, c in enumerate(C.differentials):
        rank = C.vn_dim(k) - vn.kernel_dim(c)
        shift += (-1) ** k * 0.5 * rank * (math.log(lambdas[k + 1]) - math.log(lambdas[k]))
    got = hc.log_l2_torsion(D).log_torsion - hc.log_l2_torsion(C).log_torsion
    assert got == pytest.approx(shift, abs=1e-9)


# -- chain isomorphisms

@given(seeds, st.sampled_from(FINITE))
def test_chain_isomorphism_identity(seed, G):
    rng = np.random.default_rng(seed)
    C = hc.random_complex(rng, G)
    D, f = hc.random_chain_isomorphism(rng, C)
    lhs, rhs, diff = hc.torsion_compare(C, D, f)
    assert abs(diff) < 1e-8


def test_chain_isomorphism_over_integers():
    # C: 1 --(z - 2)--> 1 ; f = (3, 3 + z) is a chain map into D with d = (3+z)(z-2)/3
    c = EquivariantOperator.laurent({1: 1.0, 0: -2.0})
    C = hc.HilbertComplex(Z, 1, [1, 1], [c])
    f0 = EquivariantOperator.laurent({0: 3.0})
    f1 = EquivariantOperator.laurent({0: 3.0, 1: 1.0})
    D = hc.HilbertComplex(Z, 1, [1, 1], [f1 @ c * (1.0 / 3.0)])
    lhs, rhs, diff = hc.torsion_compare(C, D, [f0, f1])
    assert abs(diff) < 1e-6


def test_chain_map_check_rejects_non_chain_map(rng):
    C = hc.random_complex(rng, GroupSpec.cyclic(2), degrees=2)
    D, f = hc.random_chain_isomorphism(rng, C)
    f[0] = f[0] * 2.0
    if C.ranks[1] and C.ranks[0] and C.differentials[0].max_abs() > 0:
        assert hc.check_chain_map(C, D, f)


# -- tensor products

def test_tensor_ranks_are_convolution(rng):
    G = GroupSpec.cyclic(2)
    C = hc.random_complex(rng, G, degrees=3)
    D = hc.random_complex(rng, GroupSpec.trivial(), degrees=2)
    P = hc.tensor_product(C, D)
    expect = np.convolve(C.ranks, D.ranks).tolist()
    assert P.ranks == expect
    assert hc.validate(P) == []


@given(seeds)
def test_product_formula_finite(seed):
    rng = np.random.default_rng(seed)
    C = hc.random_complex(rng, GroupSpec.cyclic(2), acyclic=True)
    D = hc.random_complex(rng, GroupSpec.cyclic(3), acyclic=True)
    P = hc.tensor_product(C, D)
    lhs = hc.log_l2_torsion(P).log_torsion
    rhs = (C.euler_characteristic() * hc.log_l2_torsion(D).log_torsion
           + D.euler_characteristic() * hc.log_l2_torsion(C).log_torsion)
    assert lhs == pytest.approx(rhs, abs=1e-8)
    assert P.euler_characteristic() == pytest.approx(C.euler_characteristic()
                                                     * D.euler_characteristic())


def test_product_with_integers_factor(rng):
    C = hc.random_complex(rng, GroupSpec.cyclic(2), acyclic=True, degrees=2)
    D = hc.HilbertComplex(Z, 1, [1, 1], [EquivariantOperator.laurent({1: 1.0, 0: -3.0})])
    P = hc.tensor_product(C, D)
    assert not P.group.is_finite and P.group.finite_factor == 2
    lhs = hc.log_l2_torsion(P).log_torsion
    rhs = (C.euler_characteristic() * math.log(3.0)
           + D.euler_characteristic() * hc.log_l2_torsion(C).log_torsion)
    assert lhs == pytest.approx(rhs, abs=1e-6)


def test_product_of_two_integer_complexes_is_refused():
    D = hc.HilbertComplex(Z, 1, [1, 1], [EquivariantOperator.laurent({1: 1.0, 0: -3.0})])
    with pytest.raises(ValueError):
        hc.tensor_product(D, D)


# -- reports and JSON

def test_cohomology_report_exports(rng):
    C = hc.random_complex(rng, GroupSpec.cyclic(3))
    rep = hc.cohomology_report(C)
    data = json.loads(rep.to_json())
    assert data["log_torsion"] == pytest.approx(hc.log_l2_torsion(C).log_torsion)
    assert all(a == "inf+" for a in data["alpha"])
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("degree,betti")
    assert len(lines) == len(C.ranks) + 1


@given(seeds, st.sampled_from(FINITE))
def test_complex_json_roundtrip(seed, G):
    C = hc.random_complex(np.random.default_rng(seed), G)
    D = hc.complex_from_dict(json.loads(json.dumps(hc.complex_to_dict(C))))
    assert D.ranks == C.ranks
    assert hc.log_l2_torsion(D).log_torsion == pytest.approx(hc.log_l2_torsion(C).log_torsion,
                                                            abs=1e-12)
