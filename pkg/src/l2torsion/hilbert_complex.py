"""Finite type Hilbert N(G)-cochain complexes.

A complex is a list of ranks m_0..m_n and differentials c^k : C^k -> C^{k+1},
all equivariant operators over one group with one fiber dimension. An
optional positive definite matrix per degree replaces the standard inner
product on each copy of the fiber block; every spectral computation first
conjugates c^k by the square roots of these metrics.

Torsion uses  log T(C) = sum_k (-1)^k log det(c^k),  determinants taken off
the kernel.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import vn_core as vn
from .vn_core import EquivariantOperator, GroupSpec, NotDeterminantClass

C2_TOL = 1e-12


class HilbertComplex:
    def __init__(self, group, fiber_dim, ranks, differentials, metrics=None):
        self.group = group
        self.fiber_dim = int(fiber_dim)
        self.ranks = [int(m) for m in ranks]
        self.differentials = list(differentials)
        if metrics is None:
            metrics = [None] * len(self.ranks)
        if len(metrics) != len(self.ranks):
            raise ValueError("need one metric (or None) per degree")
        self.metrics = [None if h is None else np.array(h, dtype=complex) for h in metrics]

    @property
    def top_degree(self):
        return len(self.ranks) - 1

    @property
    def trace_scale(self):
        return 1 if self.group.is_finite else self.group.finite_factor

    def vn_dim(self, k):
        return self.ranks[k] * self.fiber_dim / self.trace_scale

    def euler_characteristic(self):
        return sum((-1) ** k * self.vn_dim(k) for k in range(len(self.ranks)))

    def differential(self, k):
        """c^k, with zero maps outside the stored range."""
        if 0 <= k < len(self.differentials):
            return self.differentials[k]
        src = self.ranks[k] if 0 <= k < len(self.ranks) else 0
        tgt = self.ranks[k + 1] if 0 <= k + 1 < len(self.ranks) else 0
        return EquivariantOperator.zero(self.group, tgt, src, self.fiber_dim)

    def metric(self, k):
        n = self.ranks[k] * self.fiber_dim
        h = self.metrics[k] if 0 <= k < len(self.metrics) else None
        return np.eye(n, dtype=complex) if h is None else h

    def __repr__(self):
        return f"HilbertComplex({self.group.kind}, d={self.fiber_dim}, ranks={self.ranks})"


def validate(C):
    """Every violation of the complex axioms, as a list of messages (empty if ok)."""
    errors = []
    n = len(C.ranks)
    if any(m < 0 for m in C.ranks):
        errors.append("ranks must be nonnegative")
    if len(C.differentials) > max(n - 1, 0):
        errors.append(f"{len(C.differentials)} differentials for {n} degrees")
    for k, c in enumerate(C.differentials):
        if c.group != C.group or c.fiber_dim != C.fiber_dim:
            errors.append(f"c^{k} lives over a different group or fiber")
            continue
        if k + 1 < n and (c.source_rank, c.target_rank) != (C.ranks[k], C.ranks[k + 1]):
            errors.append(f"c^{k} maps rank {c.source_rank} -> {c.target_rank}, "
                          f"expected {C.ranks[k]} -> {C.ranks[k + 1]}")
    for k, h in enumerate(C.metrics):
        if h is None:
            continue
        size = C.ranks[k] * C.fiber_dim
        if h.shape != (size, size):
            errors.append(f"metric in degree {k} has shape {h.shape}, expected {(size, size)}")
        elif not _is_positive_definite(h):
            errors.append(f"metric in degree {k} is not positive definite Hermitian")
    if errors:
        return errors
    for k in range(len(C.differentials) - 1):
        comp = C.differentials[k + 1] @ C.differentials[k]
        if comp.max_abs() > C2_TOL:
            errors.append(f"c^{k + 1} o c^{k} != 0 (max coefficient {comp.max_abs():.3e})")
    return errors


def _is_positive_definite(h, tol=1e-12):
    if h.size == 0:
        return True
    if not np.allclose(h, h.conj().T, atol=1e-12 * max(1.0, np.abs(h).max())):
        return False
    return np.linalg.eigvalsh(0.5 * (h + h.conj().T)).min() > tol * max(1.0, np.abs(h).max())


def _sqrt_pair(h):
    """(h^{1/2}, h^{-1/2}) by Hermitian eigendecomposition."""
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (v * np.sqrt(w)) @ v.conj().T, (v / np.sqrt(w)) @ v.conj().T


def metric_operator(C, k, power):
    """h_k^{power} as an operator supported on the identity element (power = +-1/2)."""
    root, inv_root = _sqrt_pair(C.metric(k))
    mat = root if power > 0 else inv_root
    return EquivariantOperator.from_matrix(C.group, mat, C.ranks[k], C.ranks[k], C.fiber_dim)


def twisted_differential(C, k):
    """h_{k+1}^{1/2} c^k h_k^{-1/2}: the differential in orthonormal coordinates."""
    c = C.differential(k)
    if C.metrics[k] is None and (k + 1 >= len(C.metrics) or C.metrics[k + 1] is None):
        return c
    out = c
    if k + 1 < len(C.ranks):
        out = metric_operator(C, k + 1, 0.5) @ out
    if k < len(C.ranks):
        out = out @ metric_operator(C, k, -0.5)
    return out


def laplacian(C, k):
    """Delta_k = c^k* c^k + c^{k-1} c^{k-1}* in the twisted inner products."""
    up = twisted_differential(C, k)
    lap = up.adjoint() @ up
    if k >= 1:
        down = twisted_differential(C, k - 1)
        lap = lap + down @ down.adjoint()
    return lap


def l2_betti(C, k, tol=vn.KERNEL_TOL):
    """vn-dimension of the harmonic space in degree k."""
    if not 0 <= k < len(C.ranks):
        return 0.0
    if C.ranks[k] == 0:
        return 0.0
    up = twisted_differential(C, k)
    if k >= 1:
        stacked = _vstack_ops(up, twisted_differential(C, k - 1).adjoint())
    else:
        stacked = up
    return vn.kernel_dim(stacked, tol)


def _vstack_ops(a, b):
    """[a; b] as one operator into the direct sum of the two targets."""
    terms = {}
    za = np.zeros(a.shape, dtype=complex)
    zb = np.zeros(b.shape, dtype=complex)
    for g in set(a.terms) | set(b.terms):
        terms[g] = np.vstack([a.terms.get(g, za), b.terms.get(g, zb)])
    return EquivariantOperator(a.group, a.source_rank, a.target_rank + b.target_rank,
                               a.fiber_dim, terms)


def betti_numbers(C):
    return [l2_betti(C, k) for k in range(len(C.ranks))]


@dataclass
class TorsionResult:
    log_torsion: float
    log_dets: list
    determinant_class: bool = True
    failed_degree: int = None

    @property
    def torsion(self):
        return math.exp(self.log_torsion)


def log_l2_torsion(C, **kwargs):
    """sum_k (-1)^k log det(c^k) with metric-twisted differentials."""
    logs = []
    total = 0.0
    for k in range(len(C.differentials)):
        res = vn.log_fk_det(twisted_differential(C, k), **kwargs)
        if not res.determinant_class:
            raise NotDeterminantClass(f"c^{k} is not of determinant class", degree=k)
        logs.append(res.log_det)
        total += (-1) ** k * res.log_det
    return TorsionResult(total, logs)


def l2_torsion(C, **kwargs):
    return log_l2_torsion(C, **kwargs).torsion


# ---------------------------------------------------------------- cohomology report

@dataclass
class CohomologyReport:
    betti: list
    alpha: list
    determinant_class: list
    log_det: list
    euler_characteristic: float
    log_torsion: float = None
    flags: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "betti": self.betti,
            "alpha": [str(a) for a in self.alpha],
            "determinant_class": self.determinant_class,
            "log_det": self.log_det,
            "euler_characteristic": self.euler_characteristic,
            "log_torsion": self.log_torsion,
            "torsion": None if self.log_torsion is None else math.exp(self.log_torsion),
            "flags": self.flags,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["degree", "betti", "alpha", "determinant_class", "log_det"])
        for k in range(len(self.betti)):
            log_det = self.log_det[k] if k < len(self.log_det) else ""
            alpha = str(self.alpha[k]) if k < len(self.alpha) else ""
            det_class = self.determinant_class[k] if k < len(self.determinant_class) else ""
            writer.writerow([k, repr(self.betti[k]), alpha, det_class, repr(log_det)])
        return buf.getvalue()


def cohomology_report(C):
    betti = betti_numbers(C)
    alphas = []
    classes = []
    logs = []
    for k in range(len(C.differentials)):
        c = twisted_differential(C, k)
        sd = vn.spectral_density(c)
        alphas.append(sd.alpha)
        classes.append(bool(sd.determinant_class))
        logs.append(sd.log_integral)
    log_t = None
    if all(classes):
        log_t = sum((-1) ** k * v for k, v in enumerate(logs))
    return CohomologyReport(betti, alphas, classes, logs, C.euler_characteristic(), log_t)


# ---------------------------------------------------------------- chain isomorphisms

def _fiber_samples(group, nodes=2048):
    """Angles (or None for the table realization) with weights summing to one."""
    if group.kind == "finite_cyclic":
        n = group.order
        return 2 * np.pi * np.arange(n) / n, np.full(n, 1.0 / n)
    if group.kind == "finite_table":
        return None, np.array([1.0 / group.size])
    theta = (np.arange(nodes) + 0.5) * (2 * np.pi / nodes)
    return theta, np.full(nodes, 1.0 / nodes / group.finite_factor)


def _fibers(op, theta):
    if theta is None:
        return vn.realize(op)[None]
    return vn.symbol(op, theta)


def _harmonic_bases(C, k, theta, tol=vn.KERNEL_TOL):
    """Orthonormal bases (per fiber) of the twisted harmonic space in degree k."""
    up = _fibers(twisted_differential(C, k), theta)
    if k >= 1:
        down = _fibers(twisted_differential(C, k - 1), theta)
        stacked = np.concatenate([up, down.conj().transpose(0, 2, 1)], axis=1)
    else:
        stacked = up
    bases = []
    smax = 0.0
    decomps = []
    for mat in stacked:
        if mat.shape[0] == 0:
            decomps.append((np.zeros(0), np.eye(mat.shape[1])))
            continue
        _, s, vh = np.linalg.svd(mat)
        smax = max(smax, s.max() if s.size else 0.0)
        decomps.append((s, vh))
    for s, vh in decomps:
        n = vh.shape[1]
        rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
        bases.append(vh[rank:].conj().T if rank < n else np.zeros((n, 0)))
    return bases


def _twisted_map(C, D, f, k):
    """h^D_k^{1/2} f^k h^C_k^{-1/2}."""
    return metric_operator(D, k, 0.5) @ f @ metric_operator(C, k, -0.5)


def induced_log_det(C, D, f, k):
    """log det of the map induced by f^k on harmonic representatives (P_D o f o i)."""
    theta, weights = _fiber_samples(C.group)
    qc = _harmonic_bases(C, k, theta)
    qd = _harmonic_bases(D, k, theta)
    if all(b.shape[1] == 0 for b in qc) and all(b.shape[1] == 0 for b in qd):
        return 0.0
    fk = _fibers(_twisted_map(C, D, f, k), theta)
    total = 0.0
    for w, a, bc, bd in zip(weights, fk, qc, qd):
        if bc.shape[1] != bd.shape[1]:
            raise ValueError(f"harmonic spaces in degree {k} have different dimensions")
        if bc.shape[1] == 0:
            continue
        s = np.linalg.svd(bd.conj().T @ a @ bc, compute_uv=False)
        if s.min() <= 0:
            raise ValueError(f"induced map in degree {k} is not invertible")
        total += w * np.sum(np.log(s))
    return float(total)


def check_chain_map(C, D, f, tol=1e-10):
    errors = []
    if len(f) != len(C.ranks) or len(D.ranks) != len(C.ranks):
        return ["chain map must have one component per degree"]
    for k in range(len(C.differentials)):
        lhs = D.differential(k) @ f[k]
        rhs = f[k + 1] @ C.differential(k)
        if not lhs.allclose(rhs, atol=tol * max(1.0, lhs.max_abs(), rhs.max_abs())):
            errors.append(f"d^{k} f^{k} != f^{k + 1} c^{k}")
    return errors


def torsion_compare(C, D, f):
    """Both sides of the torsion identity for a chain isomorphism f : C -> D.

    lhs = log T(C) - log T(D)
    rhs = sum (-1)^k log det(f^k) - sum (-1)^k log det(H^k(f))
    Returns (lhs, rhs, lhs - rhs).
    """
    errors = check_chain_map(C, D, f)
    if errors:
        raise ValueError("; ".join(errors))
    lhs = log_l2_torsion(C).log_torsion - log_l2_torsion(D).log_torsion
    rhs = 0.0
    for k in range(len(C.ranks)):
        if C.ranks[k] == 0:
            continue
        fk = _twisted_map(C, D, f[k], k)
        res = vn.log_fk_det(fk)
        if vn.kernel_dim(fk) > 1e-9:
            raise ValueError(f"f^{k} is not invertible")
        rhs += (-1) ** k * (res.log_det - induced_log_det(C, D, f[k], k))
    return lhs, rhs, lhs - rhs


# ---------------------------------------------------------------- tensor products

def _fold_finite(op, folded_group):
    """View an operator over a finite group as an identity-supported Z operator."""
    n = op.group.size
    mat = vn.realize(op)
    return EquivariantOperator.from_matrix(folded_group, mat, op.target_rank, op.source_rank,
                                           op.fiber_dim * n)


def _kron_blocks(a, b, ra, rb):
    """Reorder kron(a, b) from ((i,a),(k,b)) layout to rank-outer ((i,k),(a,b)) layout."""
    mpa, da, ma, _ = ra
    mpb, db, mb, _ = rb
    a4 = a.reshape(mpa, da, ma, da)
    b4 = b.reshape(mpb, db, mb, db)
    t = np.einsum("iajc,kble->ikabjlce", a4, b4)
    return t.reshape(mpa * mpb * da * db, ma * mb * da * db)


def tensor_operators(a, b, group, combine):
    """a (x) b as an operator over ``group``; combine(g1, g2) is the product element."""
    ra = (a.target_rank, a.fiber_dim, a.source_rank, a.fiber_dim)
    rb = (b.target_rank, b.fiber_dim, b.source_rank, b.fiber_dim)
    terms = {}
    for g1, x in a.terms.items():
        for g2, y in b.terms.items():
            g = combine(g1, g2)
            blk = _kron_blocks(x, y, ra, rb)
            terms[g] = terms[g] + blk if g in terms else blk
    return EquivariantOperator(group, a.source_rank * b.source_rank,
                               a.target_rank * b.target_rank, a.fiber_dim * b.fiber_dim, terms)


def _block_operator(group, d, row_ranks, col_ranks, blocks):
    rows = np.concatenate([[0], np.cumsum(row_ranks)]) * d
    cols = np.concatenate([[0], np.cumsum(col_ranks)]) * d
    terms = {}
    for (r, c), op in blocks.items():
        for g, m in op.terms.items():
            mat = terms.setdefault(g, np.zeros((rows[-1], cols[-1]), dtype=complex))
            mat[rows[r]:rows[r + 1], cols[c]:cols[c + 1]] += m
    return EquivariantOperator(group, sum(col_ranks), sum(row_ranks), d, terms)


def _product_setup(C, D):
    """Common group for C (x) D and converters for operators of each factor."""
    g1, g2 = C.group, D.group
    if not g1.is_finite and not g2.is_finite:
        raise ValueError("tensor products of two integer complexes are out of scope")
    if g1.is_finite and g2.is_finite:
        if g2.size == 1:
            return g1, (lambda op: op), (lambda op: _retag(op, g1)), (lambda a, b: a)
        if g1.size == 1:
            return g2, (lambda op: _retag(op, g2)), (lambda op: op), (lambda a, b: b)
        group = vn.direct_product(g1, g2)
        n2 = g2.size
        return group, (lambda op: op), (lambda op: op), (lambda a, b: a * n2 + b)
    if g1.is_finite:
        group = GroupSpec.integers(g1.size * g2.finite_factor)
        return group, (lambda op: _fold_finite(op, group)), (lambda op: _retag(op, group)), \
            (lambda a, b: a + b)
    group = GroupSpec.integers(g2.size * g1.finite_factor)
    return group, (lambda op: _retag(op, group)), (lambda op: _fold_finite(op, group)), \
        (lambda a, b: a + b)


def _retag(op, group):
    if op.group.is_finite and op.group.size == 1:
        return EquivariantOperator(group, op.source_rank, op.target_rank, op.fiber_dim,
                                   {group.identity: m for m in op.terms.values()})
    return EquivariantOperator(group, op.source_rank, op.target_rank, op.fiber_dim, op.terms)


def tensor_product(C, D):
    """Total complex of C (x) D with differential c (x) 1 + (-1)^p 1 (x) d."""
    group, conv_c, conv_d, combine = _product_setup(C, D)
    nc, nd = len(C.ranks), len(D.ranks)

    def factor_ops(X, k, conv):
        ident = conv(EquivariantOperator.identity(X.group, X.ranks[k], X.fiber_dim))
        diff = conv(X.differential(k))
        metric = conv(EquivariantOperator.from_matrix(X.group, X.metric(k), X.ranks[k],
                                                      X.ranks[k], X.fiber_dim))
        return ident, diff, metric

    fc = [factor_ops(C, p, conv_c) for p in range(nc)]
    fd = [factor_ops(D, q, conv_d) for q in range(nd)]
    d = fc[0][0].fiber_dim * fd[0][0].fiber_dim if nc and nd else C.fiber_dim * D.fiber_dim

    def tens(a, b):
        return tensor_operators(a, b, group, combine)

    total = nc + nd - 1
    pieces = [[(p, n - p) for p in range(nc) if 0 <= n - p < nd] for n in range(total)]
    ranks = [sum(C.ranks[p] * D.ranks[q] for p, q in pieces[n]) for n in range(total)]
    diffs = []
    for n in range(total - 1):
        src, tgt = pieces[n], pieces[n + 1]
        blocks = {}
        for ci, (p, q) in enumerate(src):
            for ri, (pp, qq) in enumerate(tgt):
                if (pp, qq) == (p + 1, q):
                    blocks[(ri, ci)] = tens(fc[p][1], fd[q][0])
                elif (pp, qq) == (p, q + 1):
                    blocks[(ri, ci)] = (-1) ** p * tens(fc[p][0], fd[q][1])
        diffs.append(_block_operator(group, d, [C.ranks[a] * D.ranks[b] for a, b in tgt],
                                     [C.ranks[a] * D.ranks[b] for a, b in src], blocks))
    metrics = None
    if any(h is not None for h in C.metrics) or any(h is not None for h in D.metrics):
        metrics = []
        for n in range(total):
            blocks = {(i, i): tens(fc[p][2], fd[q][2]) for i, (p, q) in enumerate(pieces[n])}
            sizes = [C.ranks[p] * D.ranks[q] for p, q in pieces[n]]
            op = _block_operator(group, d, sizes, sizes, blocks)
            metrics.append(op.terms.get(group.identity, np.eye(ranks[n] * d)))
    return HilbertComplex(group, d, ranks, diffs, metrics)


def twist_metric(C, metrics):
    """Copy of C with the per-degree metrics replaced (None keeps the standard one)."""
    metrics = list(metrics)
    for k, h in enumerate(metrics):
        if h is None:
            continue
        h = np.asarray(h, dtype=complex)
        size = C.ranks[k] * C.fiber_dim
        if h.shape != (size, size) or not _is_positive_definite(h):
            raise ValueError(f"metric in degree {k} must be a positive definite {size}x{size} matrix")
    return HilbertComplex(C.group, C.fiber_dim, C.ranks, C.differentials, metrics)


# ---------------------------------------------------------------- JSON

def complex_to_dict(C):
    out = {"group": C.group.to_dict(), "fiber_dim": C.fiber_dim, "ranks": C.ranks,
           "differentials": [vn.operator_to_dict(c) for c in C.differentials]}
    if any(h is not None for h in C.metrics):
        out["metrics"] = [None if h is None else vn._block_to_json(h) for h in C.metrics]
    return out


def complex_from_dict(data):
    diffs_raw = data.get("differentials", [])
    if "group" in data:
        group = GroupSpec.from_dict(data["group"])
    elif diffs_raw:
        group = GroupSpec.from_dict(diffs_raw[0]["group"])
    else:
        raise ValueError("complex needs a group")
    ranks = [int(m) for m in data["ranks"]]
    d = int(data.get("fiber_dim", diffs_raw[0].get("fiber_dim", 1) if diffs_raw else 1))
    diffs = [vn.operator_from_dict(op, group) for op in diffs_raw]
    metrics = None
    if data.get("metrics") is not None:
        metrics = []
        for k, h in enumerate(data["metrics"]):
            if h is None:
                metrics.append(None)
                continue
            arr = np.asarray(h, dtype=float)
            if arr.ndim == 3:
                arr = arr[..., 0] + 1j * arr[..., 1]
            metrics.append(arr)
    return HilbertComplex(group, d, ranks, diffs, metrics)


# ---------------------------------------------------------------- random instances

def random_operator(rng, group, target, source, d, support=2, scale=1.0):
    """Random operator with ``support`` random group elements (finite groups)."""
    terms = {}
    for _ in range(support):
        g = int(rng.integers(group.size)) if group.is_finite else int(rng.integers(-2, 3))
        blk = rng.normal(size=(target * d, source * d)) + 1j * rng.normal(size=(target * d, source * d))
        terms[g] = terms.get(g, 0) + scale * blk
    return EquivariantOperator(group, source, target, d, terms)


def random_invertible(rng, group, rank, d, support=2):
    """2 + (perturbation of norm at most 1.5): invertible by a Neumann series."""
    op = EquivariantOperator.identity(group, rank, d) * 2.0
    for _ in range(support):
        pert = random_operator(rng, group, rank, rank, d, support=1)
        (blk,) = pert.terms.values()
        nrm = np.linalg.norm(blk, 2)
        op = op + pert * (1.5 * rng.random() / support / max(nrm, 1e-12))
    return op


def random_metric(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return A @ A.conj().T / n + 0.5 * np.eye(n)


def random_complex(rng, group, d=None, degrees=None, acyclic=False, metrics=True):
    """A random complex with prescribed kernel structure, c^k = A_{k+1} E_k A_k^{-1}.

    Each degree splits as (image from below | harmonic | mapped up); E_k
    identifies the last block of degree k with the first block of degree
    k + 1, and the A_k are random invertible operators.
    """
    d = d or int(rng.integers(1, 3))
    degrees = degrees or int(rng.integers(2, 4))
    if not group.is_finite:
        raise ValueError("random complexes are built over finite groups")
    up = [int(rng.integers(0, 3)) for _ in range(degrees - 1)] + [0]
    harm = [0 if acyclic else int(rng.integers(0, 2)) for _ in range(degrees)]
    down = [0] + up[:-1]
    ranks = [down[k] + harm[k] + up[k] for k in range(degrees)]
    if sum(ranks) == 0:
        up[0] = down[1] = 1
        ranks[0] = ranks[1] = 1
    A = [random_invertible(rng, group, m, d) if m else None for m in ranks]
    diffs = []
    for k in range(degrees - 1):
        E = np.zeros((ranks[k + 1] * d, ranks[k] * d))
        src = (down[k] + harm[k]) * d
        for i in range(up[k] * d):
            E[i, src + i] = 1.0
        op = EquivariantOperator.from_matrix(group, E, ranks[k + 1], ranks[k], d)
        if ranks[k + 1] and ranks[k]:
            op = A[k + 1] @ op @ A[k].inverse()
        diffs.append(op)
    mets = [random_metric(rng, m * d) if (metrics and m) else None for m in ranks]
    return HilbertComplex(group, d, ranks, diffs, mets)


def random_chain_isomorphism(rng, C, metrics=True):
    """(D, f) with D isomorphic to C through the random invertible f."""
    f = [random_invertible(rng, C.group, m, C.fiber_dim) if m else
         EquivariantOperator.zero(C.group, 0, 0, C.fiber_dim) for m in C.ranks]
    diffs = []
    for k, c in enumerate(C.differentials):
        op = c
        if C.ranks[k + 1]:
            op = f[k + 1] @ op
        if C.ranks[k]:
            op = op @ f[k].inverse()
        diffs.append(op)
    mets = [random_metric(rng, m * C.fiber_dim) if (metrics and m) else None for m in C.ranks]
    return HilbertComplex(C.group, C.fiber_dim, C.ranks, diffs, mets), f
