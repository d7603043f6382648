"""Morse-Smale cochain complexes built from combinatorial Morse data.

A system lists critical orbits (label, index, Hermitian metric on the fiber),
integer incidence numbers over the group ring between orbits of adjacent
index, and a flat bundle given by a representation of the deck group. The
incidence term n*gamma between p and q becomes the block n * rho(gamma)^{-1}
sitting at group element gamma in the (q, p) entry of the differential.

Torsion here follows the Morse-Smale convention
    log T^MS = sum_k (-1)^(k+1) log det(d^k),
the negative of the alternating sum used for general Hilbert complexes.
"""
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import hilbert_complex as hc
from . import vn_core as vn
from .vn_core import EquivariantOperator, GroupSpec


# ---------------------------------------------------------------- small helpers

def matrix_from_json(data, d=None):
    """Nested real lists, [re, im] pairs, or a scalar; returns a complex array."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    elif arr.ndim == 0:
        arr = arr * np.eye(d or 1)
    arr = np.array(arr, dtype=complex)
    if d is not None and arr.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got shape {arr.shape}")
    return arr


def matrix_to_json(mat):
    mat = np.asarray(mat)
    if np.all(mat.imag == 0):
        return mat.real.tolist()
    return [[[float(v.real), float(v.imag)] for v in row] for row in mat]


def _is_pd(h, tol=1e-12):
    h = np.asarray(h)
    return (h.shape[0] == h.shape[1] and np.allclose(h, h.conj().T, atol=1e-12 * max(1, np.abs(h).max()))
            and np.linalg.eigvalsh(0.5 * (h + h.conj().T)).min() > tol)


def logdet_pd(h):
    sign, val = np.linalg.slogdet(np.asarray(h))
    return float(val)


# ---------------------------------------------------------------- data types

@dataclass(frozen=True)
class CriticalOrbit:
    label: str
    index: int
    metric: np.ndarray = None
    orientation: int = 1


class MorseSystem:
    """Combinatorial Morse data with a flat bundle and metrics at critical points.

    ``generators`` maps generator names to d x d matrices. Over the integers
    there is one generator (the shift 1). Over Z/n it is one matrix R with
    R^n = 1. Over a table group, keys are element labels and the
    representation is generated by closure.
    ``incidence`` maps (from_label, to_label) to {group element: integer}.
    """

    def __init__(self, group, fiber_dim, generators, orbits, incidence):
        self.group = group
        self.fiber_dim = int(fiber_dim)
        self.generators = {str(k): np.array(v, dtype=complex) for k, v in generators.items()}
        d = self.fiber_dim
        self.orbits = [replace(o, metric=np.eye(d, dtype=complex) if o.metric is None
                               else np.array(o.metric, dtype=complex)) for o in orbits]
        self.incidence = {(str(a), str(b)): {int(g): int(n) for g, n in terms.items() if n}
                          for (a, b), terms in incidence.items()}
        self._rep = None

    # -- lookup
    def orbit(self, label):
        for o in self.orbits:
            if o.label == label:
                return o
        raise KeyError(f"unknown orbit {label!r}")

    def orbits_of_index(self, k):
        return [o for o in self.orbits if o.index == k]

    @property
    def top_index(self):
        return max((o.index for o in self.orbits), default=-1)

    @property
    def counts(self):
        return [len(self.orbits_of_index(k)) for k in range(self.top_index + 1)]

    def metrics(self):
        return {o.label: o.metric for o in self.orbits}

    def with_metrics(self, metrics):
        """Copy with metrics replaced by the given {label: matrix}."""
        orbits = [replace(o, metric=np.array(metrics.get(o.label, o.metric), dtype=complex))
                  for o in self.orbits]
        return MorseSystem(self.group, self.fiber_dim, self.generators, orbits, self.incidence)

    # -- representation
    def rho(self, g):
        """rho of a group element."""
        g = int(g)
        if self.group.kind == "integers":
            (mat,) = self.generators.values()
            return np.linalg.matrix_power(mat, g) if g >= 0 else \
                np.linalg.matrix_power(np.linalg.inv(mat), -g)
        if self.group.kind == "finite_cyclic":
            (mat,) = self.generators.values() if self.generators else (np.eye(self.fiber_dim),)
            return np.linalg.matrix_power(mat, g % self.group.order)
        if self._rep is None:
            self._rep = _close_representation(self.group, self.generators, self.fiber_dim)
        return self._rep[g]

    def generator_matrix(self, name):
        """rho of a named generator; integers accept any single key, finite groups labels."""
        if name in self.generators:
            return self.generators[name]
        if self.group.kind == "finite_table":
            return self.rho(self.group.element(name))
        raise KeyError(f"unknown generator {name!r}")


def _close_representation(group, generators, d):
    """rho on every element of a table group from rho on generators (BFS closure)."""
    rep = {group.identity: np.eye(d, dtype=complex)}
    gens = [(group.element(k), np.array(v, dtype=complex)) for k, v in generators.items()]
    frontier = [group.identity]
    while frontier:
        nxt = []
        for a in frontier:
            for g, mat in gens:
                b = group.mul(a, g)
                if b not in rep:
                    rep[b] = rep[a] @ mat
                    nxt.append(b)
        frontier = nxt
    if len(rep) != group.size:
        raise ValueError("generators do not generate the group")
    return rep


def check_representation(ms, tol=1e-9):
    errors = []
    d = ms.fiber_dim
    for name, mat in ms.generators.items():
        if mat.shape != (d, d):
            errors.append(f"generator {name} has shape {mat.shape}, expected {(d, d)}")
        elif abs(np.linalg.det(mat)) < 1e-14:
            errors.append(f"generator {name} is not invertible")
    if errors:
        return errors
    g = ms.group
    if g.kind == "integers":
        if len(ms.generators) != 1:
            errors.append("a representation of the integers needs exactly one generator")
    elif g.kind == "finite_cyclic":
        if len(ms.generators) > 1:
            errors.append("a representation of a cyclic group takes one generator")
        elif ms.generators:
            (mat,) = ms.generators.values()
            if not np.allclose(np.linalg.matrix_power(mat, g.order), np.eye(d), atol=tol):
                errors.append(f"generator does not satisfy R^{g.order} = 1")
    else:
        try:
            rep = _close_representation(g, ms.generators, d)
        except (ValueError, KeyError) as exc:
            return [str(exc)]
        for a in range(g.size):
            for b in range(g.size):
                if not np.allclose(rep[a] @ rep[b], rep[g.mul(a, b)], atol=tol):
                    errors.append(f"rho({g.label(a)}) rho({g.label(b)}) != rho of the product")
                    return errors
    return errors


# ---------------------------------------------------------------- axioms

def _ring_mul(group, x, y):
    out = {}
    for g, n in x.items():
        for h, m in y.items():
            k = group.mul(g, h)
            out[k] = out.get(k, 0) + n * m
    return {k: v for k, v in out.items() if v}


def check_ms_axioms(ms):
    """Index grading, orbit metadata and d o d = 0 over the integral group ring."""
    errors = []
    labels = [o.label for o in ms.orbits]
    if len(set(labels)) != len(labels):
        errors.append("orbit labels must be distinct")
    d = ms.fiber_dim
    for o in ms.orbits:
        if o.index < 0:
            errors.append(f"orbit {o.label} has negative index")
        if o.orientation not in (1, -1):
            errors.append(f"orbit {o.label} has orientation {o.orientation}, expected +-1")
        if o.metric.shape != (d, d) or not _is_pd(o.metric):
            errors.append(f"metric at {o.label} is not a positive definite {d}x{d} matrix")
    errors += check_representation(ms)
    known = set(labels)
    for (p, q), terms in ms.incidence.items():
        if p not in known or q not in known:
            errors.append(f"incidence {p}->{q} names an unknown orbit")
            continue
        if ms.orbit(q).index != ms.orbit(p).index + 1 and terms:
            errors.append(f"incidence {p}->{q} joins indices {ms.orbit(p).index} and "
                          f"{ms.orbit(q).index}: index gap")
        for g in terms:
            if ms.group.is_finite and not 0 <= g < ms.group.size:
                errors.append(f"incidence {p}->{q} uses element {g} outside the group")
    if errors:
        return errors
    # d(d(p)) = sum_q n(p,q) n(q,r) must vanish for every pair (p, r)
    for p in ms.orbits:
        for r in ms.orbits_of_index(p.index + 2):
            total = {}
            for q in ms.orbits_of_index(p.index + 1):
                first = ms.incidence.get((p.label, q.label), {})
                second = ms.incidence.get((q.label, r.label), {})
                for k, v in _ring_mul(ms.group, second, first).items():
                    total[k] = total.get(k, 0) + v
            if any(total.values()):
                errors.append(f"d o d != 0 from {p.label} to {r.label}")
    return errors


# ---------------------------------------------------------------- complexes

def _differential(ms, k):
    d = ms.fiber_dim
    src = ms.orbits_of_index(k)
    tgt = ms.orbits_of_index(k + 1)
    terms = {}
    for j, p in enumerate(src):
        for i, q in enumerate(tgt):
            sign = p.orientation * q.orientation
            for g, n in ms.incidence.get((p.label, q.label), {}).items():
                blk = sign * n * np.linalg.inv(ms.rho(g))
                mat = terms.setdefault(g, np.zeros((len(tgt) * d, len(src) * d), dtype=complex))
                mat[i * d:(i + 1) * d, j * d:(j + 1) * d] += blk
    return EquivariantOperator(ms.group, len(src), len(tgt), d, terms)


def build_ms_complex(ms, metrics=None):
    """The Morse-Smale cochain complex, inner products from the orbit metrics."""
    errors = check_ms_axioms(ms)
    if errors:
        raise ValueError("invalid Morse system: " + "; ".join(errors))
    metrics = metrics or ms.metrics()
    top = ms.top_index
    if top < 0:
        return hc.HilbertComplex(ms.group, ms.fiber_dim, [0], [])
    ranks = ms.counts
    diffs = [_differential(ms, k) for k in range(top)]
    blocks = []
    for k in range(top + 1):
        mats = [np.asarray(metrics[o.label], dtype=complex) for o in ms.orbits_of_index(k)]
        blocks.append(_block_diag(mats, ms.fiber_dim))
    return hc.HilbertComplex(ms.group, ms.fiber_dim, ranks, diffs, blocks)


def _block_diag(mats, d):
    out = np.zeros((len(mats) * d, len(mats) * d), dtype=complex)
    for i, m in enumerate(mats):
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = m
    return out


def log_ms_torsion(ms, metrics=None):
    """log T^MS = sum_k (-1)^(k+1) log det of the metric-twisted differentials."""
    C = build_ms_complex(ms, metrics)
    return -hc.log_l2_torsion(C).log_torsion


def ms_torsion(ms, metrics=None):
    return float(np.exp(log_ms_torsion(ms, metrics)))


# ---------------------------------------------------------------- metric anomaly

def metric_anomaly(ms, h1, h2):
    """sum over critical orbits of (-1)^index log det(h1(p)^{-1} h2(p))."""
    total = 0.0
    for o in ms.orbits:
        a = np.asarray(h1[o.label], dtype=complex)
        b = np.asarray(h2[o.label], dtype=complex)
        if a.shape != (ms.fiber_dim,) * 2 or b.shape != a.shape:
            raise ValueError(f"metric at {o.label} has the wrong size")
        total += (-1) ** o.index * (logdet_pd(b) - logdet_pd(a))
    return total


def metric_anomaly_via_torsion(ms, h1, h2):
    """The anomaly recomputed from torsions of the two built complexes.

    The identity map between the two metric structures is a chain
    isomorphism. Comparing torsions through it gives
        2 * (log T^MS(h2) - log T^MS(h1) + sum_k (-1)^k log det H^k(id)).
    The factor 2 converts determinants of h^{1/2} into determinants of h.
    """
    C1 = build_ms_complex(ms, h1)
    C2 = build_ms_complex(ms, h2)
    induced = 0.0
    for k in range(len(C1.ranks)):
        if C1.ranks[k]:
            ident = EquivariantOperator.identity(ms.group, C1.ranks[k], ms.fiber_dim)
            induced += (-1) ** k * hc.induced_log_det(C1, C2, ident, k)
    return 2.0 * (log_ms_torsion(ms, h2) - log_ms_torsion(ms, h1) + induced)


def relative_part(ms, metrics=None):
    """Metric-dependent combinatorial part of the relative torsion.

    This is -(critical-point half of log T^Met) - log T^MS. For acyclic
    complexes the metric torsion contributes nothing. When the cohomology is
    the constants in degree 0 (trivial group, trivial bundle) it contributes
    1/2 log det(sum over minima of h(p)). Other cohomology is out of scope.
    """
    metrics = metrics or ms.metrics()
    C = build_ms_complex(ms, metrics)
    betti = hc.betti_numbers(C)
    if all(b < 1e-9 for b in betti):
        met = 0.0
    elif ms.group.is_finite and ms.group.size == 1 \
            and all(np.allclose(ms.rho(g), np.eye(ms.fiber_dim)) for g in range(ms.group.size)) \
            and abs(betti[0] - ms.fiber_dim) < 1e-9 and all(b < 1e-9 for b in betti[1:]):
        total = sum(np.asarray(metrics[o.label]) for o in ms.orbits_of_index(0))
        met = 0.5 * logdet_pd(total)
    else:
        raise NotImplementedError("metric torsion only for acyclic or interval-type cohomology")
    return -met - log_ms_torsion(ms, metrics)


# ---------------------------------------------------------------- subdivision

def _parse_token(tok):
    tok = str(tok).strip()
    for suffix in ("^-1", "^{-1}", "-1"):
        if tok.endswith(suffix) and len(tok) > len(suffix):
            return tok[: -len(suffix)], -1
    return tok, 1


def parallel_transport(word, rho):
    """Ordered product of rho(generator)^{+-1} along a word.

    ``word`` is a sequence of generator names, an inverse written as
    "g^-1". ``rho`` is a mapping name -> matrix or a MorseSystem.
    """
    lookup = rho.generator_matrix if isinstance(rho, MorseSystem) else rho.__getitem__
    result = None
    for tok in word:
        name, power = _parse_token(tok)
        try:
            mat = np.asarray(lookup(name), dtype=complex)
        except KeyError:
            raise KeyError(f"unknown generator {name!r}") from None
        factor = mat if power == 1 else np.linalg.inv(mat)
        result = factor if result is None else result @ factor
    if result is None:
        if isinstance(rho, MorseSystem):
            return np.eye(rho.fiber_dim, dtype=complex)
        mats = list(rho.values())
        return np.eye(mats[0].shape[0] if mats else 1, dtype=complex)
    return result


@dataclass
class SubdivisionScheme:
    """New critical orbits, their parents and paths, and the new incidence.

    ``new_orbits`` carry the user-chosen metrics h(y). ``incidence`` replaces
    the incidence of the parent system entirely.
    """
    new_orbits: list
    parents: dict
    words: dict
    incidence: dict
    dropped: list = field(default_factory=list)


def transported_metric(ms, parent_label, word):
    """rho(w)^{-*} h(x) rho(w)^{-1}."""
    inv = np.linalg.inv(parallel_transport(word, ms))
    return inv.conj().T @ ms.orbit(parent_label).metric @ inv


def check_scheme(ms, scheme):
    errors = []
    old = {o.label for o in ms.orbits}
    for o in scheme.new_orbits:
        if o.label in old:
            errors.append(f"new orbit {o.label} collides with an existing orbit")
        parent = scheme.parents.get(o.label)
        if parent is None:
            errors.append(f"new orbit {o.label} has no parent")
        elif parent not in old or parent in scheme.dropped:
            errors.append(f"parent {parent} of {o.label} is not a surviving orbit")
        try:
            parallel_transport(scheme.words.get(o.label, []), ms)
        except KeyError as exc:
            errors.append(f"path to {o.label}: {exc.args[0]}")
    return errors


def subdivide(ms, scheme, transported=True):
    """Apply a subdivision scheme; returns (new system, {label: omega}).

    The returned system puts the transported metric on every new orbit
    (``transported=False`` keeps the user metrics instead). omega(y) is
    log det(h~(y)^{-1} h(y)) against the user metric h(y).
    """
    errors = check_scheme(ms, scheme)
    if errors:
        raise ValueError("invalid subdivision scheme: " + "; ".join(errors))
    omega = {}
    new_orbits = []
    for o in scheme.new_orbits:
        h_tilde = transported_metric(ms, scheme.parents[o.label], scheme.words.get(o.label, []))
        h_user = h_tilde if o.metric is None else np.asarray(o.metric, dtype=complex)
        omega[o.label] = logdet_pd(h_user) - logdet_pd(h_tilde)
        new_orbits.append(replace(o, metric=h_tilde if transported else h_user))
    kept = [o for o in ms.orbits if o.label not in scheme.dropped]
    out = MorseSystem(ms.group, ms.fiber_dim, ms.generators, kept + new_orbits, scheme.incidence)
    errors = check_ms_axioms(out)
    if errors:
        raise ValueError("subdivided system is invalid: " + "; ".join(errors))
    return out, omega


def subdivision_defect(ms, scheme):
    """Both sides of the subdivision identity with the user metrics.

    Returns (relative_part(ms) - relative_part(subdivided), 1/2 sum (-1)^index omega).
    """
    sub, omega = subdivide(ms, scheme, transported=False)
    index = {o.label: o.index for o in scheme.new_orbits}
    lhs = relative_part(ms) - relative_part(sub)
    rhs = 0.5 * sum((-1) ** index[k] * w for k, w in omega.items())
    return lhs, rhs


# ---------------------------------------------------------------- standard systems

def interval_system(d=1, metric=None):
    """One minimum in the middle of an interval, trivial group and bundle."""
    return MorseSystem(GroupSpec.trivial(), d, {}, [CriticalOrbit("x", 0, metric)], {})


def interval_subdivision(metrics=None, d=1):
    """Split the interval around its minimum: new minima x_L, x_R and maxima y_L, y_R.

    ``metrics`` gives user metrics for the new orbits (default: identity).
    """
    metrics = metrics or {}
    new = [CriticalOrbit(lbl, idx, metrics.get(lbl)) for lbl, idx in
           (("x_L", 0), ("x_R", 0), ("y_L", 1), ("y_R", 1))]
    new = [replace(o, metric=np.eye(d) if o.metric is None else o.metric) for o in new]
    incidence = {("x_L", "y_L"): {0: 1}, ("x", "y_L"): {0: -1},
                 ("x", "y_R"): {0: 1}, ("x_R", "y_R"): {0: -1}}
    return SubdivisionScheme(new, {o.label: "x" for o in new}, {}, incidence)


def circle_system(holonomy, h0=None, h1=None):
    """Height function on the circle lifted to its Z-cover.

    A minimum p0 and a maximum p1 per fundamental domain; the two flow lines
    out of p0 reach p1 and its translate by the deck generator.
    """
    R = np.atleast_2d(np.asarray(holonomy, dtype=complex))
    d = R.shape[0]
    orbits = [CriticalOrbit("p0", 0, h0), CriticalOrbit("p1", 1, h1)]
    return MorseSystem(GroupSpec.integers(), d, {"g": R}, orbits, {("p0", "p1"): {0: 1, -1: -1}})


def circle_subdivision(metrics=None, d=1):
    """Add a minimum q0 and maximum q1 on the edge from p1 to the next p0."""
    metrics = metrics or {}
    new = [CriticalOrbit("q0", 0, metrics.get("q0", np.eye(d))),
           CriticalOrbit("q1", 1, metrics.get("q1", np.eye(d)))]
    incidence = {("p0", "p1"): {0: 1}, ("p0", "q1"): {-1: -1},
                 ("q0", "q1"): {0: 1}, ("q0", "p1"): {0: -1}}
    return SubdivisionScheme(new, {"q0": "p1", "q1": "p1"}, {}, incidence)


def random_morse_system(rng, group=None, d=None, max_orbits=3, levels=None):
    """A random valid system: elementary pieces mixed by integer base changes.

    Pieces p -> q carry a random group-ring incidence; orbits in different
    pieces are then mixed within each index by unimodular integer matrices,
    which keeps d o d = 0 over the group ring.
    """
    if group is None:
        group = [GroupSpec.trivial(), GroupSpec.cyclic(2), GroupSpec.cyclic(3),
                 GroupSpec.cyclic(4)][rng.integers(4)]
    d = d or int(rng.integers(1, 3))
    levels = levels or int(rng.integers(2, 4))
    n = group.size
    # representation: a non-unitary conjugate of a unitary one
    S = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) + 2 * np.eye(d)
    if group.kind == "finite_cyclic" and n > 1:
        phases = np.exp(2j * np.pi * rng.integers(0, n, size=d) / n)
        gens = {"g": S @ np.diag(phases) @ np.linalg.inv(S)}
    else:
        gens = {}

    orbits_by_index = [[] for _ in range(levels)]
    incidence = {}
    counter = 0

    def new_orbit(k):
        nonlocal counter
        label = f"o{counter}"
        counter += 1
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = A @ A.conj().T + 0.5 * np.eye(d)
        orbits_by_index[k].append(CriticalOrbit(label, k, h, int(rng.choice([-1, 1]))))
        return label

    pieces = int(rng.integers(1, max_orbits + 1))
    for _ in range(pieces):
        k = int(rng.integers(0, levels))
        p = new_orbit(k)
        if k + 1 < levels and rng.random() < 0.8:
            q = new_orbit(k + 1)
            terms = {}
            for _ in range(int(rng.integers(1, 3))):
                g = int(rng.integers(0, n))
                terms[g] = terms.get(g, 0) + int(rng.choice([-2, -1, 1, 2, 3]))
            if not any(terms.values()):
                terms = {0: 1}
            incidence[(p, q)] = terms

    # mix within each index by an integer unimodular matrix U: new basis e' = U e
    mats = {}
    for k, orbs in enumerate(orbits_by_index):
        m = len(orbs)
        U = np.eye(m, dtype=int)
        for _ in range(2 * m):
            if m < 2:
                break
            i, j = rng.choice(m, size=2, replace=False)
            U[i] += int(rng.choice([-1, 1])) * U[j]
        mats[k] = U
    # incidence matrices N_k (rows index k+1, cols index k) with group-ring entries
    labels = [[o.label for o in orbs] for orbs in orbits_by_index]
    mixed = {}
    for k in range(levels - 1):
        src, tgt = labels[k], labels[k + 1]
        if not src or not tgt:
            continue
        U0 = mats[k]
        V1 = np.round(np.linalg.inv(mats[k + 1])).astype(int) if len(tgt) else None
        # new differential: N' = U_{k+1}^{-T}... use rows/cols directly over the group ring
        for a, pa in enumerate(src):
            for b, qb in enumerate(tgt):
                total = {}
                for j, pj in enumerate(src):
                    for i, qi in enumerate(tgt):
                        coef = int(U0[a, j]) * int(V1[i, b])
                        if not coef:
                            continue
                        for g, v in incidence.get((pj, qi), {}).items():
                            total[g] = total.get(g, 0) + coef * v
                total = {g: v for g, v in total.items() if v}
                if total:
                    mixed[(pa, qb)] = total
    orbits = [o for orbs in orbits_by_index for o in orbs]
    return MorseSystem(group, d, gens, orbits, mixed)


# ---------------------------------------------------------------- JSON

def system_to_dict(ms):
    return {
        "group": ms.group.to_dict(),
        "fiber_dim": ms.fiber_dim,
        "rep": {"generators": {k: matrix_to_json(v) for k, v in ms.generators.items()}},
        "orbits": [{"label": o.label, "index": o.index, "metric": matrix_to_json(o.metric)}
                   for o in ms.orbits],
        "incidence": [{"from": p, "to": q,
                       "terms": [{"g": ms.group.label(g), "n": n} for g, n in sorted(t.items())]}
                      for (p, q), t in ms.incidence.items()],
        "orientations": {o.label: o.orientation for o in ms.orbits},
    }


def system_from_dict(data):
    group = GroupSpec.from_dict(data["group"])
    gens_raw = data.get("rep", {}).get("generators", {})
    d = data.get("fiber_dim")
    if d is None:
        first = next(iter(gens_raw.values()), None)
        d = 1 if first is None else np.atleast_2d(matrix_from_json(first)).shape[0]
    d = int(d)
    gens = {k: np.atleast_2d(matrix_from_json(v)).reshape(d, d) if np.ndim(v) == 0 else
            matrix_from_json(v, d) for k, v in gens_raw.items()}
    orient = data.get("orientations", {})
    orbits = []
    for o in data.get("orbits", []):
        metric = None if o.get("metric") is None else matrix_from_json(o["metric"], d)
        orbits.append(CriticalOrbit(str(o["label"]), int(o["index"]), metric,
                                    int(orient.get(str(o["label"]), 1))))
    incidence = {}
    for entry in data.get("incidence", []):
        terms = {}
        for t in entry.get("terms", []):
            g = group.element(t["g"])
            terms[g] = terms.get(g, 0) + int(t["n"])
        incidence[(str(entry["from"]), str(entry["to"]))] = terms
    return MorseSystem(group, d, gens, orbits, incidence)


def load_system(path):
    with open(path) as fh:
        return system_from_dict(json.load(fh))
