"""Analytic torsion, metric torsion and the Witten deformation in dimension one.

Conventions: the analytic torsion of a 1-dimensional system is
    log T^An = 1/2 zeta'_{Delta_1}(0) = -1/2 log det_zeta(Delta_1).
On the interval with absolute boundary conditions the 1-form Laplacian has
spectrum (n pi / l)^2, n >= 1, and 0-forms carry the Neumann spectrum.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import eigvalsh_tridiagonal, lapack
from scipy.special import logsumexp
from scipy.special import zeta as hurwitz

from . import morse_smale as msm

# Bernoulli numbers B_2, B_4, B_6, B_8
_BERNOULLI = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0)
UNIMODULAR_TOL = 1e-10


class WittenSplitError(ArithmeticError):
    """An eigenvalue falls inside the guard band around the split threshold."""


# ---------------------------------------------------------------- systems

@dataclass
class MorseFunction1D:
    """A Morse function on an interval with its critical points (x, index)."""
    func: object
    critical: list

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


@dataclass
class OneDSystem:
    base: str
    a: float = 0.0
    b: float = 1.0
    holonomy: np.ndarray = None
    metric: object = None
    fiber_dim: int = 1
    morse: MorseFunction1D = None

    @classmethod
    def interval(cls, a=0.0, b=1.0, metric=None, fiber_dim=1, morse=None):
        if not b > a:
            raise ValueError("interval needs b > a")
        return cls("interval", float(a), float(b), None, metric, int(fiber_dim), morse)

    @classmethod
    def circle(cls, length=1.0, holonomy=1.0):
        if not length > 0:
            raise ValueError("circle length must be positive")
        R = np.atleast_2d(np.asarray(holonomy, dtype=complex))
        if R.shape[0] != R.shape[1] or abs(np.linalg.det(R)) == 0:
            raise ValueError("holonomy must be an invertible square matrix")
        return cls("circle", 0.0, float(length), R, None, R.shape[0], None)

    @property
    def length(self):
        return self.b - self.a

    def h(self, x):
        """Fiber metric at the points x, shape (len(x), d, d)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = self.fiber_dim
        if self.metric is None:
            return np.broadcast_to(np.eye(d), (x.size, d, d)).astype(complex)
        if callable(self.metric):
            vals = np.array([np.atleast_2d(self.metric(xi)) for xi in x], dtype=complex)
        else:
            vals = np.broadcast_to(np.atleast_2d(self.metric), (x.size, d, d)).astype(complex)
        if vals.shape != (x.size, d, d):
            raise ValueError(f"metric values must be {d}x{d}")
        return vals

    def critical_points(self):
        if self.morse is not None:
            return list(self.morse.critical)
        return [(0.5 * (self.a + self.b), 0)]

    @classmethod
    def from_dict(cls, data):
        base = data.get("base", "interval")
        if base == "interval":
            metric = data.get("metric")
            if metric is not None:
                metric = msm.matrix_from_json(metric, int(data.get("fiber_dim", 1)))
            return cls.interval(data.get("a", 0.0), data.get("b", 1.0), metric,
                                int(data.get("fiber_dim", 1)))
        if base == "circle":
            hol = data.get("holonomy", 1.0)
            hol = msm.matrix_from_json(hol) if np.ndim(hol) else complex(*hol) \
                if isinstance(hol, list) else hol
            return cls.circle(data.get("length", 1.0), hol)
        raise ValueError(f"unknown base {base!r}")


def load_system(path):
    with open(path) as fh:
        return OneDSystem.from_dict(json.load(fh))


# ---------------------------------------------------------------- interval spectra

def interval_spectrum(sys, k, count):
    """First ``count`` eigenvalues (with fiber multiplicity) in degree k."""
    if sys.base != "interval":
        raise ValueError("interval_spectrum needs an interval")
    start = 1 if k == 1 else 0
    if k not in (0, 1):
        return []
    n = np.arange(start, start + count)
    vals = (n * math.pi / sys.length) ** 2
    return np.repeat(vals, sys.fiber_dim).tolist()[: count * sys.fiber_dim]


def hurwitz_derivative_at_zero(q, terms=10_000):
    """d/ds zeta(s, q) at s = 0 by Euler-Maclaurin after ``terms`` summands."""
    n = np.arange(terms, dtype=float) + q
    big = terms + q
    value = -math.fsum(np.log(n)) + big * math.log(big) - big - 0.5 * math.log(big)
    for j, b2j in enumerate(_BERNOULLI[:3], start=1):
        value += b2j / (2 * j * (2 * j - 1)) * big ** (1 - 2 * j)
    return value


def hurwitz_at_zero(q, terms=10_000):
    """zeta(0, q) by the same Euler-Maclaurin split (the exact value is 1/2 - q)."""
    big = terms + q
    return terms - big + 0.5


@dataclass
class ZetaTorsion:
    log_torsion: float
    closed_form: float
    residual: float


def zeta_torsion_interval(sys, terms=10_000):
    """log T^An of an interval with trivial bundle and constant metric.

    zeta_{Delta_1}(s) = (l/pi)^{2s} zeta(2s), so
    zeta'(0) = 2 log(l/pi) zeta(0) + 2 zeta'(0); the Riemann zeta values at 0
    come from the Euler-Maclaurin continuation above.
    """
    if sys.base != "interval":
        raise ValueError("zeta_torsion_interval needs an interval")
    _require_constant_metric(sys)
    l = sys.length
    z0 = hurwitz_at_zero(1.0, terms)
    dz0 = hurwitz_derivative_at_zero(1.0, terms)
    zeta_prime = 2 * math.log(l / math.pi) * z0 + 2 * dz0
    numeric = 0.5 * zeta_prime * sys.fiber_dim
    closed = -0.5 * (math.log(2) + math.log(l)) * sys.fiber_dim
    return ZetaTorsion(numeric, closed, abs(numeric - closed))


def _require_constant_metric(sys):
    if sys.metric is not None and callable(sys.metric):
        xs = np.linspace(sys.a, sys.b, 17)
        hs = sys.h(xs)
        if not np.allclose(hs, hs[0], atol=1e-12):
            raise ValueError("the zeta computation needs a constant fiber metric")


def metric_torsion_interval(sys):
    """log T^Met from the evaluation map on harmonic 0-forms.

    Harmonic 0-forms are the constant sections c, with squared norm
    c* (int h) c. Evaluating at the minima gives c* (sum_p h(p)) c, so
    log T^Met = 1/2 (log det sum_p h(p) - log det int_a^b h dx).
    """
    if sys.base != "interval":
        raise ValueError("metric_torsion_interval needs an interval")
    minima = [x for x, idx in sys.critical_points() if idx == 0]
    if not minima:
        raise ValueError("the Morse function has no minimum")
    at_minima = sum(sys.h([x])[0] for x in minima)
    d = sys.fiber_dim
    if sys.metric is None or not callable(sys.metric):
        integral = sys.h([sys.a])[0] * sys.length
    else:
        flat, _ = integrate.quad_vec(lambda x: sys.h([x])[0].reshape(-1), sys.a, sys.b,
                                     epsabs=1e-14, epsrel=1e-13)
        integral = flat.reshape(d, d)
    return 0.5 * (msm.logdet_pd(at_minima) - msm.logdet_pd(integral))


# ---------------------------------------------------------------- circle

def _circle_logdet(a, c, l, terms=2000, direct=200, series=12):
    """log det_zeta of the operator with eigenvalues (2 pi (n + a) / l)^2 + c^2, n in Z.

    The two eigenvalues closest to zero (n = 0, -1) are taken out and added
    back explicitly. The rest is the zeta determinant of (2 pi (n + a)/l)^2
    (Hurwitz zeta at 1 + a and 2 - a) times the convergent product of
    (1 + c^2 / k_n^2), summed directly up to ``direct`` and by a Hurwitz
    series beyond.
    """
    scale = 2 * math.pi / l
    q1, q2 = 1.0 + a, 2.0 - a
    z0 = hurwitz_at_zero(q1, terms) + hurwitz_at_zero(q2, terms)
    dz = hurwitz_derivative_at_zero(q1, terms) + hurwitz_derivative_at_zero(q2, terms)
    zeta_prime = 2 * math.log(1.0 / scale) * z0 + 2 * dz
    total = -zeta_prime
    total += math.log((scale * a) ** 2 + c * c) + math.log((scale * (1 - a)) ** 2 + c * c)
    if c != 0.0:
        x = (c / scale) ** 2
        n = np.arange(1, direct + 1, dtype=float)
        total += math.fsum(np.log1p(x / (n + a) ** 2)) + math.fsum(np.log1p(x / (n + 1 - a) ** 2))
        start1, start2 = direct + 1 + a, direct + 2 - a
        if x / start1 ** 2 >= 0.5:
            raise ValueError("increase the direct summation range for this holonomy")
        for j in range(1, series + 1):
            term = (-1) ** (j + 1) * x ** j / j
            total += term * (hurwitz(2 * j, start1) + hurwitz(2 * j, start2))
    return total


def circle_analytic_channel(modulus, length=1.0):
    """Floquet average of -1/2 log det_zeta for one eigen-channel of the holonomy."""
    c = math.log(modulus) / length

    def integrand(a):
        return _circle_logdet(a, c, length)

    kw = dict(limit=200, epsabs=1e-11, epsrel=1e-11)
    if c == 0.0:
        val, err = integrate.quad(integrand, 0.0, 1.0, **kw)
    else:
        val, err = integrate.quad(integrand, 0.0, 1.0, points=[0.5], **kw)
    return -0.5 * val, 0.5 * err


@dataclass
class CircleTorsion:
    log_an: float
    log_ms: float
    residual: float
    error_estimate: float
    channels: list = field(default_factory=list)


def _normal_channels(R):
    mu, U = np.linalg.eig(R)
    if not np.allclose(R @ R.conj().T, R.conj().T @ R, atol=1e-10 * max(1, np.abs(R).max())):
        raise ValueError("circle torsion needs a normal holonomy matrix")
    # eigenvectors of a normal matrix: orthonormalize within eigenspaces
    U, _ = np.linalg.qr(U)
    if not np.allclose(U @ np.diag(mu) @ U.conj().T, R, atol=1e-9 * max(1, np.abs(R).max())):
        raise ValueError("could not unitarily diagonalize the holonomy")
    return mu, U


def equivariant_circle_metrics(sys):
    """Metrics at the minimum (x = 0) and maximum (x = l/2) of the height function.

    The fiber metric is |rho|^{-2x/l} in each eigen-channel, the metric
    invariant under the deck transformation that is symmetric about the
    maximum.
    """
    mu, U = _normal_channels(sys.holonomy)
    h0 = np.eye(sys.fiber_dim, dtype=complex)
    h1 = U @ np.diag(np.abs(mu) ** -1.0) @ U.conj().T
    return h0, h1


def circle_torsion(sys):
    """(log T^An, log T^MS) for the Z-cover of a circle with holonomy rho."""
    if sys.base != "circle":
        raise ValueError("circle_torsion needs a circle")
    mu, _ = _normal_channels(sys.holonomy)
    an = 0.0
    err = 0.0
    channels = []
    for m in mu:
        val, e = circle_analytic_channel(abs(m), sys.length)
        an += val
        err += e
        channels.append({"eigenvalue": complex(m), "log_an": val})
    h0, h1 = equivariant_circle_metrics(sys)
    ms = msm.log_ms_torsion(msm.circle_system(sys.holonomy, h0, h1))
    return CircleTorsion(an, ms, abs(an - ms), err, channels)


# ---------------------------------------------------------------- Morse functions

def _smooth_step(u):
    """C^infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        g = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return f / (f + g)


def example_morse_function(a=0.0, b=1.0, eps=None, top=None):
    """Quadratic well at the midpoint, linear of slope 1 near both ends.

    Within ``eps`` of an endpoint f = top - (distance to the boundary); the
    two pieces are blended smoothly over [eps, 3 eps]. The default ``top``
    is the right endpoint b.
    """
    l = b - a
    eps = 0.02 * l if eps is None else eps
    top = b if top is None else top
    mid = 0.5 * (a + b)
    if 3 * eps >= 0.5 * l:
        raise ValueError("eps too large for the interval")
    s_chk = np.linspace(0, 3 * eps, 200)
    if np.any(top - s_chk <= 0.5 * (0.5 * l - s_chk) ** 2):
        raise ValueError("boundary value too small to keep the midpoint the only critical point")

    def f(x):
        x = np.asarray(x, dtype=float)
        s = np.minimum(x - a, b - x)
        quad_part = 0.5 * (x - mid) ** 2
        chi = _smooth_step((s - eps) / (2 * eps))
        return chi * quad_part + (1 - chi) * (top - s)

    return MorseFunction1D(f, [(mid, 0)])


# ---------------------------------------------------------------- Witten deformation

@dataclass
class WittenRun:
    t: float
    N: int
    eigenvalues: np.ndarray
    log_sm: float
    log_la: float
    log_an: float
    log_vol: float
    small_rank: int
    scaling: list
    guard_ok: bool = True

    @property
    def split_residual(self):
        return abs(self.log_an - (self.log_sm + self.log_la))

    def row(self):
        return {"t": self.t, "logT_sm": self.log_sm, "logT_la": self.log_la,
                "logT_an": self.log_an, "residual": self.split_residual,
                "log_vol": self.log_vol, "small_rank": self.small_rank}


def _grid(sys, N):
    x = np.linspace(sys.a, sys.b, N)
    step = x[1] - x[0]
    mid = 0.5 * (x[:-1] + x[1:])
    w0 = np.full(N, step)
    w0[[0, -1]] *= 0.5
    return x, mid, step, w0, np.full(N - 1, step)


def _scalar_metric(sys, pts):
    if sys.fiber_dim != 1:
        raise ValueError("the Witten discretization handles line bundles only")
    h = sys.h(pts)[:, 0, 0]
    if np.any(np.abs(h.imag) > 0) or np.any(h.real <= 0):
        raise ValueError("fiber metric must be positive")
    return h.real


def witten_operator(sys, f, t, N):
    """Bidiagonal entries (alpha, beta) of the deformed differential in orthonormal coordinates.

    Nodes carry 0-forms (trapezoid weights), midpoints carry 1-forms
    (midpoint weights); both weights are multiplied by h. The deformed
    differential is (d_t u)_j = (e^{t(f_{j+1}-f(m_j))} u_{j+1} - e^{t(f_j-f(m_j))} u_j)/step,
    which is exp(-t f) d exp(t f) sampled on the grid.
    Row j of the orthonormal matrix has alpha_j at column j, beta_j at j+1.
    """
    x, mid, step, w0, w1 = _grid(sys, N)
    w0 = w0 * _scalar_metric(sys, x)
    w1 = w1 * _scalar_metric(sys, mid)
    fx = f(x) if f is not None else np.zeros_like(x)
    fm = f(mid) if f is not None else np.zeros_like(mid)
    right = np.exp(t * (fx[1:] - fm)) / step
    left = -np.exp(t * (fx[:-1] - fm)) / step
    s1 = np.sqrt(w1)
    alpha = s1 * left / np.sqrt(w0[:-1])
    beta = s1 * right / np.sqrt(w0[1:])
    return alpha, beta, (x, mid, w0, w1, fx, fm)


def deformed_differential(sys, f, t, N):
    """Dense (N-1) x N matrix of d_t in grid coordinates (for checks)."""
    x, mid, step, _, _ = _grid(sys, N)
    fx = f(x) if f is not None else np.zeros_like(x)
    fm = f(mid) if f is not None else np.zeros_like(mid)
    D = np.zeros((N - 1, N))
    j = np.arange(N - 1)
    D[j, j] = -np.exp(t * (fx[:-1] - fm)) / step
    D[j, j + 1] = np.exp(t * (fx[1:] - fm)) / step
    return D


def undeformed_differential(sys, N):
    return deformed_differential(sys, None, 0.0, N)


def log_det_gram(alpha, beta):
    """log det(D D^T) for the bidiagonal D by Cauchy-Binet.

    Deleting column k leaves a block triangular square matrix with
    determinant prod_{j<k} alpha_j * prod_{j>=k} beta_j. Factoring out
    prod beta_j keeps the running sums small.
    """
    lb = 2 * np.log(np.abs(beta))
    ratio = 2 * np.log(np.abs(alpha)) - lb
    prefix = np.concatenate([[0.0], np.cumsum(ratio)])
    return math.fsum(lb) + float(logsumexp(prefix))


def bidiagonal_spectrum(alpha, beta, refine=128):
    """Eigenvalues of D D^T, the smallest ones to high relative accuracy.

    The full spectrum comes from the tridiagonal D D^T, whose small
    eigenvalues carry an absolute error of order eps * ||D||^2. The
    ``refine`` smallest (more when the error budget demands it) are
    recomputed as singular values of D by bisection on the zero-diagonal
    Golub-Kahan matrix, which resolves them to relative precision.
    """
    n = alpha.size
    lam = eigvalsh_tridiagonal(alpha ** 2 + beta ** 2, beta[:-1] * alpha[1:])
    k = min(int(refine), n)
    if k > 0:
        off = np.empty(2 * n)
        off[0::2] = np.abs(alpha)
        off[1::2] = np.abs(beta)
        # 2n + 1 eigenvalues: -sigma, one exact zero, +sigma; take the k smallest positive
        # abstol = 2 * safmin asks bisection for full relative accuracy
        tiny = 2 * np.finfo(float).tiny
        m, w, _, _, info = lapack.dstebz(np.zeros(2 * n + 1), off, 2, 0.0, 0.0,
                                         n + 2, n + 1 + k, tiny, "E")
        if info != 0 or m != k:
            raise ArithmeticError(f"bisection failed (info={info})")
        lam = np.concatenate([np.sort(w[:m]) ** 2, lam[k:]])
    return lam


def witten_discretize(sys, f, t, N, threshold=1.0, guard_band=(0.5, 2.0), strict=True,
                      refine=128):
    """Deformed complex at parameter t on N nodes, split at ``threshold``."""
    if sys.base != "interval":
        raise ValueError("the Witten deformation is implemented on the interval")
    if N < 3:
        raise ValueError("need at least 3 grid nodes")
    alpha, beta, (x, mid, w0, w1, fx, fm) = witten_operator(sys, f, t, N)
    lam = bidiagonal_spectrum(alpha, beta, refine)
    lo, hi = guard_band if guard_band else (threshold, threshold)
    inside = (lam >= lo) & (lam <= hi)
    guard_ok = not bool(np.any(inside))
    if strict and not guard_ok:
        raise WittenSplitError(f"t={t}: {int(inside.sum())} eigenvalue(s) inside the guard band "
                               f"[{lo}, {hi}]; refine the grid or change t")
    small = lam < threshold
    log_sm = -0.5 * math.fsum(np.log(lam[small]))
    log_la = -0.5 * math.fsum(np.log(lam[~small]))
    log_an = -0.5 * log_det_gram(alpha, beta)
    # the kernel of d_t is spanned by exp(-t f): its norm gives Vol(t)
    log_norm = logsumexp(-2 * t * fx, b=w0)
    crit = [(float(xc), idx) for xc, idx in (f.critical if isinstance(f, MorseFunction1D)
                                              else [(0.5 * (sys.a + sys.b), 0)])]
    minima_h = _scalar_metric(sys, np.array([xc for xc, idx in crit if idx == 0]))
    # exp(t f) maps the kernel to the constants, which are evaluated at the minima
    log_vol = 0.5 * math.log(float(np.sum(minima_h))) - 0.5 * log_norm
    scaling = [{"x": xc, "index": idx,
                "log_factor": (1 - 2 * idx) / 4 * math.log(math.pi / t) - t * float(f(np.array([xc]))[0])
                if t > 0 and f is not None else 0.0} for xc, idx in crit]
    small_rank = 1 + 2 * int(small.sum())
    return WittenRun(float(t), int(N), lam, log_sm, log_la, log_an, log_vol, small_rank,
                     scaling, guard_ok)


def witten_split(run):
    return run.log_sm, run.log_la


def witten_sweep(sys, f, ts, N, **kwargs):
    return [witten_discretize(sys, f, t, N, **kwargs) for t in ts]


def runs_to_csv(runs):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "logT_sm", "logT_la", "logT_an", "residual"])
    for r in runs:
        # + 0.0 folds a signed zero into 0.0
        writer.writerow([repr(r.t + 0.0), repr(r.log_sm + 0.0), repr(r.log_la + 0.0),
                         repr(r.log_an + 0.0), repr(r.split_residual)])
    return buf.getvalue()


def small_torsion_free_term(ms_log_torsion, counts, dim_e=1, n=1):
    """Free term of log T^Sm(t) - log Vol(t) predicted by the scaling maps.

    Each critical point of index k contributes ((n - 2k)/4) log(pi / t); the
    constant part is ((n - 2k)/4) log pi, and the t f(p) terms are linear.
    """
    return ms_log_torsion + dim_e * sum((-1) ** k * m * (n - 2 * k) / 4 * math.log(math.pi)
                                        for k, m in enumerate(counts))


# ---------------------------------------------------------------- free terms

@dataclass
class FreeTermFit:
    free_term: float
    coefficients: dict
    residual: float
    condition: float


def free_term_extract(samples, max_condition=1e12):
    """Least squares fit of F(t) in the basis 1, log t, t, t log t."""
    samples = sorted((float(t), float(v)) for t, v in samples)
    if len(samples) < 6:
        raise ValueError("need at least 6 samples")
    t = np.array([s[0] for s in samples])
    y = np.array([s[1] for s in samples])
    if np.any(t <= 0):
        raise ValueError("samples need t > 0")
    if t.max() < 10 * t.min():
        raise ValueError("samples must span at least a decade of t")
    A = np.column_stack([np.ones_like(t), np.log(t), t, t * np.log(t)])
    norms = np.linalg.norm(A, axis=0)
    As = A / norms
    cond = float(np.linalg.cond(As))
    if cond > max_condition:
        raise ValueError(f"ill-conditioned fit (condition number {cond:.3e})")
    coef, *_ = np.linalg.lstsq(As, y, rcond=None)
    coef = coef / norms
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    names = ("const", "log_t", "t", "t_log_t")
    return FreeTermFit(float(coef[0]), dict(zip(names, coef.tolist())), resid, cond)


# ---------------------------------------------------------------- theta form

@dataclass
class ThetaForm:
    x: np.ndarray
    theta: np.ndarray
    unimodular: bool

    @property
    def integral(self):
        return float(integrate.trapezoid(self.theta, self.x))


def theta_1d(sys, N=1001):
    """theta(h) = d/dx log det h on a grid, and the unimodularity flag."""
    x = np.linspace(sys.a, sys.b, N)
    hs = sys.h(x)
    sign, logdet = np.linalg.slogdet(hs)
    if np.any(np.abs(sign) == 0):
        raise ValueError("fiber metric is singular somewhere on the grid")
    theta = np.gradient(logdet.real, x, edge_order=2)
    return ThetaForm(x, theta, bool(np.max(np.abs(theta)) < UNIMODULAR_TOL))
