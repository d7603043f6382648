"""Relative torsion and numeric checks of the torsion identities.

Every check computes both sides along separate routes (for instance the
torsion of an assembled tensor complex against the Euler-characteristic
weighted sum of the factor torsions) and records the residual.
"""
import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analytic_1d as an1
from . import hilbert_complex as hc
from . import morse_smale as msm
from .vn_core import GroupSpec

LOG2 = math.log(2.0)

TOLERANCES = {
    "boundary_anomaly": 1e-6,
    "product_metric_boundary": 1e-6,
    "closed_anomaly": 1e-3,
    "cheeger_muller": 1e-3,
    "chain_isomorphism": 1e-8,
    "product_euler": 1e-8,
    "product_theta_vanishing": 1e-10,
    "metric_anomaly": 1e-8,
    "subdivision": 1e-8,
    "subdivision_restored": 1e-8,
    "witten_split": 1e-10,
}


def relative_torsion(log_an, log_met, log_ms):
    """R = (log T^An - log T^Met) - log T^MS."""
    vals = (log_an, log_met, log_ms)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("relative torsion needs finite inputs")
    return (log_an - log_met) - log_ms


def main_theorem_rhs(chi_boundary, dim_e, theta_integral):
    """-(log 2)/4 chi(boundary) dim E - theta_integral / 2."""
    return -LOG2 / 4 * chi_boundary * dim_e - 0.5 * theta_integral


def euler_characteristics(obj):
    """(chi(M, E), chi(M)) as raw alternating sums of ranks."""
    if isinstance(obj, msm.MorseSystem):
        counts = obj.counts
        d = obj.fiber_dim
        scale = 1
    elif isinstance(obj, hc.HilbertComplex):
        counts = obj.ranks
        d = obj.fiber_dim
        scale = obj.trace_scale
    else:
        raise TypeError("expected a HilbertComplex or MorseSystem")
    chi = sum((-1) ** k * m for k, m in enumerate(counts))
    return chi * d / scale, chi


@dataclass
class TorsionReport:
    logT_an: float
    logT_met: float
    logT_ms: float
    chi: float
    chi_boundary: int
    theta_integral: float
    residuals: dict = field(default_factory=dict)

    @property
    def logT_rs(self):
        return self.logT_an - self.logT_met

    @property
    def R(self):
        return relative_torsion(self.logT_an, self.logT_met, self.logT_ms)

    def to_dict(self):
        out = asdict(self)
        out.update(logT_rs=self.logT_rs, R=self.R)
        return out


def interval_report(sys):
    """All torsion quantities of an interval system with a minimum at the midpoint."""
    theta = an1.theta_1d(sys)
    if not theta.unimodular:
        raise NotImplementedError("non-unimodular metrics on the interval are out of scope")
    zeta = an1.zeta_torsion_interval(sys)
    met = an1.metric_torsion_interval(sys)
    minima = [x for x, idx in sys.critical_points() if idx == 0]
    orbits = [msm.CriticalOrbit(f"x{i}", 0, sys.h([x])[0]) for i, x in enumerate(minima)]
    ms_sys = msm.MorseSystem(GroupSpec.trivial(), sys.fiber_dim, {}, orbits, {})
    ms = msm.log_ms_torsion(ms_sys)
    chi, _ = euler_characteristics(ms_sys)
    return TorsionReport(zeta.log_torsion, met, ms, chi, 2, 0.0,
                         {"zeta_closed_form": zeta.residual})


def circle_report(sys):
    ct = an1.circle_torsion(sys)
    theta = 0.0
    return TorsionReport(ct.log_an, 0.0, ct.log_ms, 0.0, 0, theta,
                         {"analytic_quadrature": ct.error_estimate})


# ---------------------------------------------------------------- checks

@dataclass
class TheoremCheck:
    check_id: str
    lhs: float
    rhs: float
    tolerance: float
    inputs_digest: str = ""
    label: str = ""
    error: str = None

    @property
    def residual(self):
        if self.error is not None:
            return math.inf
        return abs(self.lhs - self.rhs)

    @property
    def passed(self):
        return self.error is None and self.residual < self.tolerance

    def to_dict(self):
        return {"id": self.check_id, "label": self.label, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "tolerance": self.tolerance, "pass": self.passed,
                "inputs": self.inputs_digest, "error": self.error}


def digest(payload):
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _make(check_id, label, inputs, compute, tolerances):
    tol = tolerances.get(check_id, TOLERANCES[check_id])
    try:
        lhs, rhs = compute()
        return TheoremCheck(check_id, float(lhs), float(rhs), tol, digest(inputs), label)
    except Exception as exc:  # attach the failure to its check
        return TheoremCheck(check_id, math.nan, math.nan, tol, digest(inputs), label,
                            f"{type(exc).__name__}: {exc}")


def check_boundary_anomaly(a=0.0, b=1.0, tolerances=TOLERANCES):
    sys = an1.OneDSystem.interval(a, b)

    def compute():
        rep = interval_report(sys)
        return rep.R, main_theorem_rhs(rep.chi_boundary, sys.fiber_dim, rep.theta_integral)
    return _make("boundary_anomaly", f"interval [{a}, {b}]", {"a": a, "b": b}, compute, tolerances)


def check_product_metric_boundary(d=2, length=2.0, tolerances=TOLERANCES):
    """Interval with a rank d bundle and a constant unimodular, non-diagonal metric."""
    angle = 0.3
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    base = np.diag([2.0, 0.5])
    h = np.eye(d)
    h[:2, :2] = rot @ base @ rot.T
    sys = an1.OneDSystem.interval(0.0, length, h, d)

    def compute():
        rep = interval_report(sys)
        return rep.R, main_theorem_rhs(rep.chi_boundary, d, rep.theta_integral)
    return _make("product_metric_boundary", f"interval length {length}, rank {d}",
                 {"d": d, "length": length}, compute, tolerances)


def check_closed_anomaly(holonomy, tolerances=TOLERANCES):
    """Circle with a unitary holonomy: the relative torsion vanishes."""
    sys = an1.OneDSystem.circle(1.0, holonomy)

    def compute():
        if not np.allclose(np.abs(np.linalg.eigvals(sys.holonomy)), 1.0):
            raise NotImplementedError("needs a unimodular metric (unitary holonomy)")
        return circle_report(sys).R, 0.0
    return _make("closed_anomaly", f"circle holonomy {holonomy}", {"rho": str(holonomy)},
                 compute, tolerances)


def check_cheeger_muller(holonomy, tolerances=TOLERANCES):
    sys = an1.OneDSystem.circle(1.0, holonomy)

    def compute():
        ct = an1.circle_torsion(sys)
        return ct.log_an, ct.log_ms
    return _make("cheeger_muller", f"circle holonomy {holonomy}", {"rho": str(holonomy)},
                 compute, tolerances)


def check_chain_isomorphism(C, D, f, label="", tolerances=TOLERANCES):
    def compute():
        lhs, rhs, _ = hc.torsion_compare(C, D, f)
        return lhs, rhs
    return _make("chain_isomorphism", label, {"C": hc.complex_to_dict(C)}, compute, tolerances)


def check_product(C, D, label="", tolerances=TOLERANCES):
    def compute():
        lhs = hc.log_l2_torsion(hc.tensor_product(C, D)).log_torsion
        rhs = (C.euler_characteristic() * hc.log_l2_torsion(D).log_torsion
               + D.euler_characteristic() * hc.log_l2_torsion(C).log_torsion)
        return lhs, rhs
    return _make("product_euler", label, {"C": hc.complex_to_dict(C), "D": hc.complex_to_dict(D)},
                 compute, tolerances)


def check_interval_circle_product(holonomy=2.0, h_min=1.7, tolerances=TOLERANCES):
    C = msm.build_ms_complex(msm.interval_system(metric=np.array([[h_min]])))
    D = msm.build_ms_complex(msm.circle_system(holonomy, np.array([[1.0]]), np.array([[0.5]])))
    return check_product(C, D, f"interval x circle, holonomy {holonomy}", tolerances)


def check_metric_anomaly(ms, h1, h2, label="", tolerances=TOLERANCES):
    def compute():
        return msm.metric_anomaly(ms, h1, h2), msm.metric_anomaly_via_torsion(ms, h1, h2)
    return _make("metric_anomaly", label, {"ms": msm.system_to_dict(ms)}, compute, tolerances)


def check_subdivision(ms, scheme, label="", tolerances=TOLERANCES):
    def compute():
        return msm.subdivision_defect(ms, scheme)
    inputs = {"ms": msm.system_to_dict(ms), "new": [o.label for o in scheme.new_orbits]}
    return _make("subdivision", label, inputs, compute, tolerances)


def check_subdivision_restored(ms, scheme, label="", tolerances=TOLERANCES):
    """With transported metrics on the new orbits the relative part is unchanged."""
    def compute():
        sub, _ = msm.subdivide(ms, scheme, transported=True)
        return msm.relative_part(sub), msm.relative_part(ms)
    inputs = {"ms": msm.system_to_dict(ms), "new": [o.label for o in scheme.new_orbits]}
    return _make("subdivision_restored", label, inputs, compute, tolerances)


def product_theta(h1_sys, h2_sys, N=1001):
    """theta of h1 (x) h2 on the product grid: d2 theta(h1) + d1 theta(h2)."""
    t1 = an1.theta_1d(h1_sys, N)
    t2 = an1.theta_1d(h2_sys, N)
    return h2_sys.fiber_dim * t1.theta[:, None] + h1_sys.fiber_dim * t2.theta[None, :]


def rotating_unimodular_metric(x):
    """det = 1 with eigenvectors rotating along x."""
    c, s = math.cos(x), math.sin(x)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([3.0, 1.0 / 3.0]) @ rot.T


def check_product_theta_vanishing(tolerances=TOLERANCES):
    first = an1.OneDSystem.interval(0.0, 1.0, rotating_unimodular_metric, 2)
    second = an1.OneDSystem.interval(0.0, 2.0, lambda x: np.array([[1.0]]), 1)

    def compute():
        return float(np.max(np.abs(product_theta(first, second, 201)))), 0.0
    return _make("product_theta_vanishing", "unimodular boundary metric x odd factor", {},
                 compute, tolerances)


def check_witten_split(t, N=4000, tolerances=TOLERANCES):
    sys = an1.OneDSystem.interval(0.0, 1.0)
    f = an1.example_morse_function(0.0, 1.0)

    def compute():
        run = an1.witten_discretize(sys, f, t, N)
        return run.log_an, run.log_sm + run.log_la
    return _make("witten_split", f"t={t}, N={N}", {"t": t, "N": N}, compute, tolerances)


# ---------------------------------------------------------------- suites

FINITE_GROUPS = (GroupSpec.trivial(), GroupSpec.cyclic(2), GroupSpec.cyclic(3),
                 GroupSpec.cyclic(4))


def combinatorial_checks(seed=7, count=20, tolerances=TOLERANCES):
    rng = np.random.default_rng(seed)
    checks = []
    for i in range(count):
        G = FINITE_GROUPS[rng.integers(len(FINITE_GROUPS))]
        C = hc.random_complex(rng, G)
        D, f = hc.random_chain_isomorphism(rng, C)
        checks.append(check_chain_isomorphism(C, D, f, f"random #{i} over order {G.size}",
                                              tolerances))
    for i in range(count):
        C = hc.random_complex(rng, FINITE_GROUPS[rng.integers(4)], acyclic=True)
        D = hc.random_complex(rng, FINITE_GROUPS[rng.integers(4)], acyclic=True)
        checks.append(check_product(C, D, f"random acyclic pair #{i}", tolerances))
    checks.append(check_interval_circle_product(tolerances=tolerances))
    for i in range(count):
        ms = msm.random_morse_system(rng)
        h1 = ms.metrics()
        h2 = {k: hc.random_metric(rng, ms.fiber_dim) for k in h1}
        checks.append(check_metric_anomaly(ms, h1, h2, f"random system #{i}", tolerances))
    for ms, scheme, label in standard_subdivisions(rng):
        checks.append(check_subdivision(ms, scheme, label, tolerances))
        checks.append(check_subdivision_restored(ms, scheme, label, tolerances))
    checks.append(check_product_theta_vanishing(tolerances))
    return checks


def standard_subdivisions(rng):
    """Interval and circle subdivisions with random positive metrics on the new orbits."""
    out = []
    pos = lambda: np.array([[float(np.exp(rng.normal()))]])
    ms = msm.interval_system(metric=pos())
    scheme = msm.interval_subdivision({k: pos() for k in ("x_L", "x_R", "y_L", "y_R")})
    out.append((ms, scheme, "interval split around the minimum"))
    for rho in (1.0, np.exp(1j * math.pi / 3), -1.0, 2.0):
        ms = msm.circle_system(rho, pos(), pos())
        scheme = msm.circle_subdivision({"q0": pos(), "q1": pos()})
        out.append((ms, scheme, f"circle edge split, holonomy {rho}"))
    return out


def example_checks(name, tolerances=TOLERANCES):
    if name == "interval":
        return [check_boundary_anomaly(0.0, 1.0, tolerances),
                check_boundary_anomaly(0.0, 2.0, tolerances),
                check_product_metric_boundary(tolerances=tolerances)]
    if name == "circle":
        hols = (1.0, np.exp(1j * math.pi / 3), -1.0)
        return ([check_closed_anomaly(h, tolerances) for h in hols]
                + [check_cheeger_muller(h, tolerances) for h in hols + (2.0,)])
    if name == "witten":
        return [check_witten_split(t, tolerances=tolerances) for t in (0, 20, 50, 100, 200)]
    raise ValueError(f"unknown example {name!r}")


SUITE_KEYS = {"examples", "suites", "seed", "count", "tolerances"}


def run_theorem_suite(config):
    """Evaluate the checks selected by ``config``.

    config keys: examples (list of "interval", "circle", "witten"), suites
    (list containing "combinatorial"), seed, count, tolerances (overrides by
    check id).
    """
    if not isinstance(config, dict):
        raise ValueError("suite config must be a JSON object")
    unknown = set(config) - SUITE_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    tolerances = dict(TOLERANCES)
    for k, v in config.get("tolerances", {}).items():
        if k not in TOLERANCES:
            raise ValueError(f"unknown check id {k!r} in tolerances")
        tolerances[k] = float(v)
    checks = []
    for name in config.get("examples", []):
        checks += example_checks(name, tolerances)
    for name in config.get("suites", []):
        if name != "combinatorial":
            raise ValueError(f"unknown suite {name!r}")
        checks += combinatorial_checks(int(config.get("seed", 7)), int(config.get("count", 20)),
                                       tolerances)
    if not checks:
        raise ValueError("config selects no checks")
    return checks


def checks_to_json(checks):
    return json.dumps([c.to_dict() for c in checks], indent=2, sort_keys=True, default=str)


def checks_to_csv(checks):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "label", "lhs", "rhs", "residual", "tolerance", "pass"])
    for c in checks:
        writer.writerow([c.check_id, c.label, repr(c.lhs), repr(c.rhs), repr(c.residual),
                         repr(c.tolerance), str(c.passed).lower()])
    return buf.getvalue()
