"""Quadrature on the circle [0, 2pi) for integrands with isolated log singularities.

The integrands met here are sums of log singular values of a trigonometric
matrix polynomial. They are smooth except at finitely many angles where the
rank drops, and there they blow up like log|theta - theta0|. We integrate with
a composite midpoint rule on panels that shrink dyadically toward every
detected singular angle, using Gauss-Legendre nodes inside each panel (the
integrand is smooth on every panel since each one stays a fixed ratio away
from the singularity).
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def _wrap(theta):
    return np.mod(theta, TWO_PI)


def _golden_min(func, lo, hi, xtol=1e-15, max_iter=200):
    """Golden-section search; works on the V-shaped cusps where sigma vanishes."""
    g = 0.5 * (np.sqrt(5.0) - 1.0)
    m1, m2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = func(m1), func(m2)
    for _ in range(max_iter):
        if hi - lo < xtol * max(1.0, abs(lo)):
            break
        if f1 <= f2:
            hi, m2, f2 = m2, m1, f1
            m1 = hi - g * (hi - lo)
            f1 = func(m1)
        else:
            lo, m1, f1 = m1, m2, f2
            m2 = lo + g * (hi - lo)
            f2 = func(m2)
    return m1 if f1 <= f2 else m2


def find_singular_angles(smallest_sv, scale, samples=4096, rel_tol=1e-3, merge_tol=1e-6):
    """Locate angles where ``smallest_sv`` (vectorized) nearly vanishes.

    Local minima of the sampled function are polished by golden-section
    search. Minima deeper than ``rel_tol * scale`` are returned.
    """
    if scale <= 0:
        return []
    h = TWO_PI / samples
    grid = (np.arange(samples) + 0.5) * h
    vals = smallest_sv(grid)
    left = np.roll(vals, 1)
    right = np.roll(vals, -1)
    candidates = np.nonzero((vals <= left) & (vals <= right) & (vals < 0.25 * scale))[0]

    angles = []
    for i in candidates:
        theta0 = _golden_min(lambda x: float(smallest_sv(np.array([x]))[0]),
                             grid[i] - h, grid[i] + h)
        theta0 = float(_wrap(theta0))
        if smallest_sv(np.array([theta0]))[0] < rel_tol * scale:
            angles.append(theta0)

    # cancellation can leave a flat zero region a few 1e-8 wide; merge clusters
    angles.sort()
    clusters = []
    for a in angles:
        if clusters and a - clusters[-1][-1] < merge_tol:
            clusters[-1].append(a)
        else:
            clusters.append([a])
    if len(clusters) > 1 and clusters[0][0] + TWO_PI - clusters[-1][-1] < merge_tol:
        clusters[0] = [a - TWO_PI for a in clusters.pop()] + clusters[0]
    return sorted(float(_wrap(np.mean(c))) for c in clusters)


def graded_rule(breakpoints, nodes_per_panel, depth=24, base_panels=64):
    """Nodes and weights of the graded rule on [0, 2pi).

    Without breakpoints this is the plain composite midpoint rule, which
    converges geometrically for smooth periodic integrands. Otherwise
    every arc between consecutive breakpoints is split in half and each half
    is covered by panels [s + L/2^(k+1), s + L/2^k] graded toward its
    singular end s. The innermost sliver of width L/2^depth is left out of the
    nodes; ``slivers`` lists (inner panel slice, next panel slice, width) so
    that the caller can add its contribution from a local a + b log|s| model.
    """
    q = nodes_per_panel
    if not breakpoints:
        n = base_panels * q
        theta = (np.arange(n) + 0.5) * (TWO_PI / n)
        return theta, np.full(n, TWO_PI / n), []

    pts = sorted(breakpoints)
    thetas = []
    weights = []
    slivers = []
    gl_x, gl_w = np.polynomial.legendre.leggauss(q)
    offsets = 0.5 * (gl_x + 1.0)
    unit_w = 0.5 * gl_w
    pos = 0
    for idx, start in enumerate(pts):
        stop = pts[idx + 1] if idx + 1 < len(pts) else pts[0] + TWO_PI
        half = 0.5 * (stop - start)
        left_slices = []
        right_slices = []
        for k in range(depth):
            width = half / 2.0 ** (k + 1)
            thetas.append(start + width + width * offsets)
            thetas.append(stop - width - width * offsets)
            weights.append(np.concatenate([width * unit_w, width * unit_w]))
            left_slices.append(slice(pos, pos + q))
            right_slices.append(slice(pos + q, pos + 2 * q))
            pos += 2 * q
        delta = half / 2.0 ** depth
        slivers.append((left_slices[-1], left_slices[-2], delta))
        slivers.append((right_slices[-1], right_slices[-2], delta))
    theta = _wrap(np.concatenate(thetas))
    return theta, np.concatenate(weights), slivers


def sliver_correction(vals, weights, slivers):
    """Integral over the dropped slivers assuming vals ~ a + b log(distance)."""
    total = 0.0
    log2 = np.log(2.0)
    for inner, nxt, delta in slivers:
        v1 = float(np.dot(weights[inner], vals[inner]) / weights[inner].sum())
        v2 = float(np.dot(weights[nxt], vals[nxt]) / weights[nxt].sum())
        # panel means of log s over [delta, 2 delta] and [2 delta, 4 delta]
        b = (v2 - v1) / log2
        a = v1 - b * (np.log(delta) + 2 * log2 - 1)
        total += delta * (a + b * (np.log(delta) - 1))
    return total


def circle_mean(func, breakpoints, rtol=1e-6, start_nodes=8, max_nodes=512, depth=24,
                divergence_floor=None):
    """(1/2pi) times the integral of ``func`` over the circle, refined until stable.

    ``func`` maps an array of angles to an array of values. The number of
    nodes per panel doubles until two successive values agree to ``rtol``
    (relative, with an absolute floor of ``rtol``). Returns (value,
    error_estimate, converged, diverged). ``diverged`` is set as soon as a
    partial value drops below ``divergence_floor``.
    """
    prev = None
    q = start_nodes
    value = np.nan
    err = np.inf
    while q <= max_nodes:
        theta, w, slivers = graded_rule(breakpoints, q, depth=depth)
        vals = func(theta)
        value = float((np.dot(w, vals) + sliver_correction(vals, w, slivers)) / TWO_PI)
        if divergence_floor is not None and (not np.isfinite(value) or value < divergence_floor):
            return value, np.inf, False, True
        if prev is not None:
            err = abs(value - prev)
            if err < rtol * max(1.0, abs(value)):
                return value, err, True, False
        prev = value
        q *= 2
    return value, err, False, False
