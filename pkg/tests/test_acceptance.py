"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test records a PASS/FAIL line, printed in the pytest terminal summary.
Criterion 12 cannot be met (see its docstring) and is a strict xfail.
"""
import math
import time

import numpy as np
import pytest

from l2torsion import analytic_1d as an1
from l2torsion import hilbert_complex as hc
from l2torsion import morse_smale as msm
from l2torsion import relative_anomaly as ra
from l2torsion import vn_core as vn
from l2torsion.vn_core import EquivariantOperator, GroupSpec

from conftest import record_criterion

LOG2 = math.log(2.0)
Z = GroupSpec.integers()
SHIFT_MINUS_TWO = {1: 1.0, 0: -2.0}
LAPLACIAN = {0: 2.0, 1: -1.0, -1: -1.0}


def timed(func, *args, **kwargs):
    start = time.perf_counter()
    out = func(*args, **kwargs)
    return out, time.perf_counter() - start


def test_interval_analytic_torsion():
    """1. Zeta-regularized torsion of the unit interval."""
    res, secs = timed(an1.zeta_torsion_interval, an1.OneDSystem.interval(0.0, 1.0))
    expect = -0.5 * (LOG2 + math.log(1.0))
    err = abs(res.log_torsion - expect)
    ok = err < 1e-6 and abs(res.log_torsion + 0.3465736) < 1e-6 and secs < 1.0
    record_criterion(1, ok, f"log T^An(0,1) = {res.log_torsion:.10f}, error {err:.1e}, "
                            f"{secs * 1e3:.1f} ms")
    assert ok


def test_interval_metric_torsion():
    """2. Metric torsion -1/2 log l for l in {1, 2, e^2}."""
    errs = []
    for l in (1.0, 2.0, math.e ** 2):
        val = an1.metric_torsion_interval(an1.OneDSystem.interval(0.0, l))
        errs.append(abs(val + 0.5 * math.log(l)))
    ok = max(errs) < 1e-10
    record_criterion(2, ok, f"max error {max(errs):.1e} over l in {{1, 2, e^2}}")
    assert ok


def test_interval_relative_torsion():
    """3. R of the interval system equals -(log 2)/2 and the boundary formula."""
    rep = ra.interval_report(an1.OneDSystem.interval(0.0, 1.0))
    rhs = ra.main_theorem_rhs(2, 1, 0.0)
    r1, r2 = abs(rep.R + LOG2 / 2), abs(rep.R - rhs)
    ok = max(r1, r2) < 1e-6
    record_criterion(3, ok, f"R = {rep.R:.10f}, residual vs -(log 2)/2 {r1:.1e}, "
                            f"vs boundary formula {r2:.1e}")
    assert ok


def test_fk_determinant_exactness():
    """4. Cyclic shift determinants and two Mahler measures over Z."""
    cyc_err = 0.0
    for n in range(1, 13):
        op = EquivariantOperator.laurent({1: 1.0, 0: -1.0}, group=GroupSpec.cyclic(n))
        eig = 1.0 - np.exp(2j * np.pi * np.arange(1, n) / n)
        oracle = float(np.prod(np.abs(eig))) ** (1.0 / n) if n > 1 else 1.0
        cyc_err = max(cyc_err, abs(vn.fk_det(op) - oracle), abs(oracle - n ** (1.0 / n)))
    d2, t2 = timed(vn.fk_det, EquivariantOperator.laurent(SHIFT_MINUS_TWO))
    d1, t1 = timed(vn.fk_det, EquivariantOperator.laurent(LAPLACIAN))
    ok = cyc_err < 1e-12 and abs(d2 - 2.0) < 1e-4 and abs(d1 - 1.0) < 1e-4 and max(t1, t2) < 1.0
    record_criterion(4, ok, f"Z/n error {cyc_err:.1e}; det(z-2) = {d2:.10f} ({t2 * 1e3:.0f} ms); "
                            f"det(2-z-1/z) = {d1:.10f} ({t1 * 1e3:.0f} ms)")
    assert ok


def test_novikov_shubin():
    """5. Growth exponents 1 and 1/2; finite groups report a gap."""
    a1 = vn.spectral_density(EquivariantOperator.laurent({1: 1.0, 0: -1.0})).alpha
    a2 = vn.spectral_density(EquivariantOperator.laurent(LAPLACIAN)).alpha
    rng = np.random.default_rng(5)
    finite = [vn.spectral_density(hc.random_operator(rng, G, 2, 2, 2)).alpha
              for G in (GroupSpec.trivial(), GroupSpec.cyclic(4), GroupSpec.cyclic(7))]
    ok = (abs(a1.alpha - 1.0) < 0.1 and abs(a2.alpha - 0.5) < 0.1
          and all(str(a) == "inf+" for a in finite))
    record_criterion(5, ok, f"alpha(z-1) = {a1.alpha:.4f}, alpha(2-z-1/z) = {a2.alpha:.4f}, "
                            f"finite groups {[str(a) for a in finite]}")
    assert ok


def test_chain_isomorphism_identity():
    """6. Torsion change under 200 random chain isomorphisms."""
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for i in range(200):
        G = ra.FINITE_GROUPS[i % len(ra.FINITE_GROUPS)]
        C = hc.random_complex(rng, G)
        D, f = hc.random_chain_isomorphism(rng, C)
        worst = max(worst, abs(hc.torsion_compare(C, D, f)[2]))
    secs = time.perf_counter() - start
    ok = worst < 1e-8 and secs < 30
    record_criterion(6, ok, f"max residual {worst:.1e} over 200 complexes, {secs:.1f} s")
    assert ok


def test_product_formula():
    """7. Torsion of a tensor product, random pairs and interval x circle."""
    rng = np.random.default_rng(77)
    worst = 0.0
    for i in range(20):
        G1 = ra.FINITE_GROUPS[i % 4]
        G2 = ra.FINITE_GROUPS[(i + 1) % 4]
        C = hc.random_complex(rng, G1, acyclic=True)
        D = hc.random_complex(rng, G2, acyclic=True)
        worst = max(worst, ra.check_product(C, D).residual)
    ic = ra.check_interval_circle_product()
    ok = worst < 1e-8 and ic.residual < 1e-8
    record_criterion(7, ok, f"random pairs max residual {worst:.1e}; "
                            f"interval x circle residual {ic.residual:.1e}")
    assert ok


def test_metric_anomaly():
    """8. Metric anomaly on 100 random Morse systems."""
    rng = np.random.default_rng(88)
    worst = 0.0
    for _ in range(100):
        ms = msm.random_morse_system(rng)
        h1 = {o.label: hc.random_metric(rng, ms.fiber_dim) for o in ms.orbits}
        h2 = {o.label: hc.random_metric(rng, ms.fiber_dim) for o in ms.orbits}
        worst = max(worst, ra.check_metric_anomaly(ms, h1, h2).residual)
    ok = worst < 1e-8
    record_criterion(8, ok, f"max residual {worst:.1e} over 100 systems")
    assert ok


def test_subdivision():
    """9. Subdivision defect, restoration by transported metrics, omega = 0 when unimodular."""
    rng = np.random.default_rng(99)
    worst = 0.0
    for ms, scheme, label in ra.standard_subdivisions(rng):
        worst = max(worst, ra.check_subdivision(ms, scheme, label).residual,
                    ra.check_subdivision_restored(ms, scheme, label).residual)
    # unitary holonomy and identity metrics: transport changes nothing
    omegas = []
    for rho in (1.0, np.exp(1j * math.pi / 3), -1.0):
        _, om = msm.subdivide(msm.circle_system(rho), msm.circle_subdivision(), transported=False)
        omegas += list(om.values())
    _, om = msm.subdivide(msm.interval_system(), msm.interval_subdivision(), transported=False)
    omegas += list(om.values())
    max_omega = max(abs(w) for w in omegas)
    ok = worst < 1e-8 and max_omega < 1e-12
    record_criterion(9, ok, f"max residual {worst:.1e}; max |omega| on unimodular data "
                            f"{max_omega:.1e}")
    assert ok


def test_witten_deformation():
    """10. Split identity, small rank and the free term on N = 4000 nodes."""
    sys = an1.OneDSystem.interval(0.0, 1.0)
    f = an1.example_morse_function()
    ts = [0.0, 20.0, 50.0, 70.0, 100.0, 140.0, 200.0, 300.0, 500.0]
    runs = an1.witten_sweep(sys, f, ts, 4000)
    split = max(r.split_residual for r in runs)
    ranks = [r.small_rank for r in runs if r.t >= 50]
    # Gaussian tail corrections outside the fitted basis bias t < 50
    fit = an1.free_term_extract([(r.t, r.log_sm - r.log_vol) for r in runs if r.t >= 50])
    predicted = an1.small_torsion_free_term(0.0, [1])
    rel = abs(fit.free_term - predicted) / abs(predicted)
    ok = split < 1e-10 and all(k == 1 for k in ranks) and rel < 0.05
    record_criterion(10, ok, f"max split residual {split:.1e}; small rank {sorted(set(ranks))}; "
                             f"free term {fit.free_term:.6f} vs {predicted:.6f} "
                             f"({100 * rel:.3f}%)")
    assert ok


def test_circle_cheeger_muller():
    """11. Analytic against combinatorial torsion on the circle cover."""
    worst = 0.0
    for rho in (1.0, np.exp(1j * math.pi / 3), -1.0, 2.0):
        ct = an1.circle_torsion(an1.OneDSystem.circle(1.0, rho))
        worst = max(worst, ct.residual)
    ok = worst < 1e-3
    record_criterion(11, ok, f"max |log T^An - log T^MS| = {worst:.1e} over four holonomies")
    assert ok


@pytest.mark.xfail(strict=True, reason="kernel-excluded 2 - z - 1/z over Z/n equals n^(2/n), "
                                       "1.00407 at n = 4096, outside 1e-3 of 1")
def test_backend_consistency():
    """12. Z/n determinants approach the Z value at n = 4096 within 1e-3.

    For z - 2 this holds: |2^n - 1|^(1/n) is 2 to double precision. For the
    Laplacian 2 - z - 1/z it cannot hold. The nonzero eigenvalues over Z/n
    are 4 sin^2(pi k / n), whose product is n^2, so the kernel-excluded
    determinant is n^(2/n) = exp(2 log n / n). This tends to 1 only like
    2 log(n) / n, which is 4.1e-3 at n = 4096; the 1e-3 tolerance needs n
    above 20000. The numbers below are computed, not assumed.
    """
    n = 4096
    G = GroupSpec.cyclic(n)
    results = {}
    for name, coeffs in (("z-2", SHIFT_MINUS_TWO), ("2-z-1/z", LAPLACIAN)):
        finite = vn.fk_det(EquivariantOperator.laurent(coeffs, group=G))
        integers = vn.fk_det(EquivariantOperator.laurent(coeffs))
        results[name] = (finite, integers, abs(finite - integers))
    ok = all(err < 1e-3 for _, _, err in results.values())
    detail = "; ".join(f"{k}: Z/{n} {a:.6f} vs Z {b:.6f} (gap {e:.1e})"
                       for k, (a, b, e) in results.items())
    if not ok:
        detail += f"; the Laplacian gap is n^(2/n) - 1 = {n ** (2 / n) - 1:.2e}, unattainable"
    record_criterion(12, ok, detail)
    assert ok
