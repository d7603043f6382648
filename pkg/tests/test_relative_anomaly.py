import json
import math

import numpy as np
import pytest

from l2torsion import analytic_1d as an1
from l2torsion import hilbert_complex as hc
from l2torsion import morse_smale as msm
from l2torsion import relative_anomaly as ra
from l2torsion.vn_core import GroupSpec

LOG2 = math.log(2.0)


def test_relative_torsion_arithmetic():
    assert ra.relative_torsion(1.0, 0.25, -0.5) == pytest.approx(1.25)
    with pytest.raises(ValueError):
        ra.relative_torsion(math.nan, 0.0, 0.0)


def test_main_theorem_rhs_interval_value():
    assert ra.main_theorem_rhs(2, 1, 0.0) == pytest.approx(-LOG2 / 2)
    assert ra.main_theorem_rhs(0, 3, 2.0) == pytest.approx(-1.0)


def test_euler_characteristics():
    assert ra.euler_characteristics(msm.circle_system(2.0)) == (0.0, 0)
    C = hc.HilbertComplex(GroupSpec.integers(2), 3, [1, 0], [])
    assert ra.euler_characteristics(C) == (1.5, 1)
    with pytest.raises(TypeError):
        ra.euler_characteristics("interval")


@pytest.mark.parametrize("length", [1.0, 2.0, 5.0])
def test_interval_report(length):
    rep = ra.interval_report(an1.OneDSystem.interval(0.0, length))
    assert rep.logT_an == pytest.approx(-0.5 * (LOG2 + math.log(length)), abs=1e-9)
    assert rep.logT_met == pytest.approx(-0.5 * math.log(length), abs=1e-12)
    assert rep.logT_ms == 0.0
    assert rep.R == pytest.approx(-LOG2 / 2, abs=1e-9)
    d = rep.to_dict()
    assert d["R"] == pytest.approx(rep.R) and d["logT_rs"] == pytest.approx(rep.logT_rs)


def test_interval_report_rejects_non_unimodular_metric():
    sys = an1.OneDSystem.interval(0, 1, metric=lambda x: np.array([[1.0 + x]]))
    with pytest.raises(NotImplementedError):
        ra.interval_report(sys)


def test_check_record_fields():
    c = ra.check_boundary_anomaly()
    assert c.passed and c.check_id == "boundary_anomaly"
    assert len(c.inputs_digest) == 12
    assert c.to_dict()["pass"] is True


def test_check_records_errors_instead_of_raising():
    c = ra.check_closed_anomaly(2.0)
    assert not c.passed and "unimodular" in c.error
    assert c.residual == math.inf


def test_digest_is_stable():
    assert ra.digest({"a": 1, "b": [2]}) == ra.digest({"b": [2], "a": 1})


def test_product_metric_boundary():
    assert ra.check_product_metric_boundary().passed


def test_interval_circle_product():
    assert ra.check_interval_circle_product().passed


def test_product_theta_vanishes():
    c = ra.check_product_theta_vanishing()
    assert c.passed and c.residual < 1e-10


def test_rotating_metric_is_unimodular():
    for x in np.linspace(0, 3, 7):
        assert np.linalg.det(ra.rotating_unimodular_metric(x)) == pytest.approx(1.0)


def test_suite_config_errors():
    with pytest.raises(ValueError):
        ra.run_theorem_suite({"examples": ["interval"], "colour": 1})
    with pytest.raises(ValueError):
        ra.run_theorem_suite({"tolerances": {"nope": 1.0}, "examples": ["interval"]})
    with pytest.raises(ValueError):
        ra.run_theorem_suite({})
    with pytest.raises(ValueError):
        ra.run_theorem_suite([])
    with pytest.raises(ValueError):
        ra.run_theorem_suite({"suites": ["exotic"]})


def test_tolerance_override_can_fail_a_check():
    checks = ra.run_theorem_suite({"examples": ["interval"],
                                   "tolerances": {"boundary_anomaly": 1e-16}})
    assert not all(c.passed for c in checks)


def test_combinatorial_suite_passes_and_is_deterministic():
    a = ra.run_theorem_suite({"suites": ["combinatorial"], "seed": 3, "count": 4})
    b = ra.run_theorem_suite({"suites": ["combinatorial"], "seed": 3, "count": 4})
    assert all(c.passed for c in a)
    assert ra.checks_to_csv(a) == ra.checks_to_csv(b)
    ids = {c.check_id for c in a}
    assert {"chain_isomorphism", "product_euler", "metric_anomaly", "subdivision",
            "subdivision_restored", "product_theta_vanishing"} <= ids


def test_circle_examples_pass():
    assert all(c.passed for c in ra.example_checks("circle"))


def test_exports():
    checks = ra.example_checks("interval")
    data = json.loads(ra.checks_to_json(checks))
    assert [d["id"] for d in data] == [c.check_id for c in checks]
    assert ra.checks_to_csv(checks).splitlines()[0] == "id,label,lhs,rhs,residual,tolerance,pass"
