"""Group von Neumann algebra arithmetic for finite groups and for the integers.

An equivariant operator L^2(G)^m (x) V -> L^2(G)^m' (x) V is stored as a
finite sum  sum_g  g (x) A_g  where each A_g is an (m'd) x (md) complex matrix
laid out with the rank index outermost and the fiber index innermost.

Finite groups are realized through the left regular representation. The
integers are realized through Fourier series: the element k acts as z^k and
the operator becomes the matrix valued trigonometric polynomial
M(theta) = sum_k A_k e^{ik theta}. Cyclic groups Z/n are handled the same way
on the n-th roots of unity, which block diagonalizes the regular
representation exactly.
"""
import csv
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _quadrature as quad

KERNEL_TOL = 1e-10
QUAD_RTOL = 1e-6
DIVERGENCE_FACTOR = 1e6


class NotDeterminantClass(ArithmeticError):
    """Raised when a log determinant integral diverges."""

    def __init__(self, message, degree=None):
        super().__init__(message)
        self.degree = degree


class QuadratureError(ArithmeticError):
    """Raised when circle quadrature does not settle within its budget."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


# ---------------------------------------------------------------- groups

@dataclass(frozen=True)
class GroupSpec:
    """A finite group given by its multiplication table, or the integers.

    ``finite_factor`` is only used for the integers kind: it records the
    order of a finite group F whose regular representation has been folded
    into the fiber, so that the operator really lives over F x Z and every
    trace must be divided by |F|.
    """
    kind: str
    order: int = 0
    table: tuple = None
    labels: tuple = None
    finite_factor: int = 1

    @classmethod
    def cyclic(cls, n):
        if int(n) < 1:
            raise ValueError("cyclic group order must be >= 1")
        return cls("finite_cyclic", order=int(n))

    @classmethod
    def trivial(cls):
        return cls.cyclic(1)

    @classmethod
    def integers(cls, finite_factor=1):
        return cls("integers", finite_factor=int(finite_factor))

    @classmethod
    def from_table(cls, table, labels=None):
        arr = np.asarray(table, dtype=int)
        errors = check_group_table(arr)
        if errors:
            raise ValueError("invalid group table: " + "; ".join(errors))
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != arr.shape[0] or len(set(labels)) != len(labels):
                raise ValueError("labels must be distinct and match the table size")
        return cls("finite_table", order=arr.shape[0],
                   table=tuple(tuple(int(v) for v in row) for row in arr), labels=labels)

    @property
    def is_finite(self):
        return self.kind != "integers"

    @property
    def size(self):
        if not self.is_finite:
            raise ValueError("the integers are infinite")
        return self.order

    @property
    def identity(self):
        if self.kind == "finite_table":
            return _table_identity(np.asarray(self.table))
        return 0

    def mul(self, a, b):
        if self.kind == "integers":
            return a + b
        if self.kind == "finite_cyclic":
            return (a + b) % self.order
        return self.table[a][b]

    def inv(self, a):
        if self.kind == "integers":
            return -a
        if self.kind == "finite_cyclic":
            return (-a) % self.order
        e = self.identity
        return self.table[a].index(e)

    def element(self, label):
        """Parse a JSON group element (label or integer)."""
        if self.kind == "integers":
            return int(label)
        if self.labels is not None and str(label) in self.labels:
            return self.labels.index(str(label))
        g = int(label)
        if not 0 <= g < self.order:
            raise ValueError(f"group element {label!r} out of range")
        return g

    def label(self, g):
        if self.labels is not None:
            return self.labels[g]
        return int(g)

    def regular_matrices(self):
        """Permutation matrices L_g e_x = e_{gx} of the left regular representation."""
        n = self.size
        mats = np.zeros((n, n, n))
        for g in range(n):
            for x in range(n):
                mats[g, self.mul(g, x), x] = 1.0
        return mats

    def to_dict(self):
        if self.kind == "integers":
            out = {"kind": "integers"}
            if self.finite_factor != 1:
                out["finite_factor"] = self.finite_factor
            return out
        if self.kind == "finite_cyclic":
            return {"kind": "finite_cyclic", "order": self.order}
        out = {"kind": "finite_table", "table": [list(r) for r in self.table]}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind")
        if kind == "finite_cyclic":
            return cls.cyclic(data["order"])
        if kind == "integers":
            return cls.integers(data.get("finite_factor", 1))
        if kind == "finite_table":
            return cls.from_table(data["table"], data.get("labels"))
        raise ValueError(f"unknown group kind {kind!r}")


def _table_identity(table):
    n = table.shape[0]
    for e in range(n):
        if np.array_equal(table[e], np.arange(n)) and np.array_equal(table[:, e], np.arange(n)):
            return e
    raise ValueError("group table has no identity")


def check_group_table(table):
    """List every group axiom the table violates."""
    table = np.asarray(table)
    errors = []
    if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 1:
        return ["table must be a non-empty square array"]
    n = table.shape[0]
    if table.min() < 0 or table.max() >= n:
        return ["table entries must lie in 0..n-1"]
    try:
        e = _table_identity(table)
    except ValueError as exc:
        return [str(exc)]
    for a in range(n):
        if not (np.any(table[a] == e) and np.any(table[:, a] == e)):
            errors.append(f"element {a} has no inverse")
    # (ab)c against a(bc), indexed [a, b, c]
    left = table[table, :]
    right = table[np.arange(n)[:, None, None], table[None, :, :]]
    if not np.array_equal(left, right):
        errors.append("table is not associative")
    return errors


def direct_product(g1, g2):
    """Direct product of two finite groups as a table group; pair (a, b) -> a*|g2| + b."""
    n1, n2 = g1.size, g2.size
    table = np.zeros((n1 * n2, n1 * n2), dtype=int)
    for a1 in range(n1):
        for b1 in range(n2):
            for a2 in range(n1):
                for b2 in range(n2):
                    table[a1 * n2 + b1, a2 * n2 + b2] = g1.mul(a1, a2) * n2 + g2.mul(b1, b2)
    return GroupSpec.from_table(table)


# ---------------------------------------------------------------- operators

class EquivariantOperator:
    """A matrix over the group algebra with d x d complex blocks.

    ``terms`` maps a group element to the dense (target_rank*d) x
    (source_rank*d) coefficient matrix. Instances are treated as immutable.
    """

    def __init__(self, group, source_rank, target_rank, fiber_dim, terms=None):
        self.group = group
        self.source_rank = int(source_rank)
        self.target_rank = int(target_rank)
        self.fiber_dim = int(fiber_dim)
        if self.source_rank < 0 or self.target_rank < 0 or self.fiber_dim < 1:
            raise ValueError("ranks must be >= 0 and fiber_dim >= 1")
        shape = (self.target_rank * self.fiber_dim, self.source_rank * self.fiber_dim)
        clean = {}
        for g, mat in (terms or {}).items():
            mat = np.array(mat, dtype=complex)
            if mat.shape != shape:
                raise ValueError(f"coefficient of {g} has shape {mat.shape}, expected {shape}")
            if group.is_finite and not 0 <= g < group.size:
                raise ValueError(f"group element {g} out of range")
            g = int(g)
            if g in clean:
                clean[g] = clean[g] + mat
            else:
                clean[g] = mat
        for mat in clean.values():
            mat.setflags(write=False)
        self.terms = clean

    # -- constructors
    @classmethod
    def identity(cls, group, rank, fiber_dim=1):
        n = rank * fiber_dim
        return cls(group, rank, rank, fiber_dim, {group.identity: np.eye(n)})

    @classmethod
    def zero(cls, group, target_rank, source_rank, fiber_dim=1):
        return cls(group, source_rank, target_rank, fiber_dim, {})

    @classmethod
    def from_matrix(cls, group, matrix, target_rank, source_rank, fiber_dim=1):
        """Operator supported on the identity element."""
        return cls(group, source_rank, target_rank, fiber_dim, {group.identity: matrix})

    @classmethod
    def laurent(cls, coeffs, fiber_dim=1, group=None):
        """Scalar (rank 1) operator sum_k c_k z^k from {k: c_k}; c_k may be a d x d block."""
        group = group or GroupSpec.integers()
        if group.kind == "finite_table":
            raise ValueError("Laurent operators need the integers or a cyclic group")
        terms = {}
        for k, c in coeffs.items():
            c = np.asarray(c, dtype=complex)
            g = int(k) % group.order if group.is_finite else int(k)
            blk = c * np.eye(fiber_dim) if c.ndim == 0 else c
            terms[g] = terms[g] + blk if g in terms else blk
        return cls(group, 1, 1, fiber_dim, terms)

    # -- shape helpers
    @property
    def shape(self):
        return (self.target_rank * self.fiber_dim, self.source_rank * self.fiber_dim)

    @property
    def is_square(self):
        return self.source_rank == self.target_rank

    @property
    def source_dim(self):
        return self.source_rank * self.fiber_dim

    def _check_compatible(self, other):
        if self.group != other.group or self.fiber_dim != other.fiber_dim:
            raise ValueError("operators live over different groups or fibers")

    # -- algebra
    def __add__(self, other):
        self._check_compatible(other)
        if (self.source_rank, self.target_rank) != (other.source_rank, other.target_rank):
            raise ValueError("cannot add operators of different shapes")
        terms = dict(self.terms)
        for g, m in other.terms.items():
            terms[g] = terms[g] + m if g in terms else m
        return EquivariantOperator(self.group, self.source_rank, self.target_rank,
                                   self.fiber_dim, terms)

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return EquivariantOperator(self.group, self.source_rank, self.target_rank, self.fiber_dim,
                                   {g: scalar * m for g, m in self.terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        """Composition self o other."""
        self._check_compatible(other)
        if other.target_rank != self.source_rank:
            raise ValueError("rank mismatch in composition")
        terms = {}
        for g1, a in self.terms.items():
            for g2, b in other.terms.items():
                g = self.group.mul(g1, g2)
                prod = a @ b
                terms[g] = terms[g] + prod if g in terms else prod
        return EquivariantOperator(self.group, other.source_rank, self.target_rank,
                                   self.fiber_dim, terms)

    def adjoint(self):
        terms = {self.group.inv(g): m.conj().T for g, m in self.terms.items()}
        return EquivariantOperator(self.group, self.target_rank, self.source_rank,
                                   self.fiber_dim, terms)

    def inverse(self):
        """Inverse in the group algebra; finite groups only."""
        if not self.group.is_finite:
            raise ValueError("inverse is only available over finite groups")
        if not self.is_square:
            raise ValueError("only square operators can be inverted")
        realized = realize(self)
        inv = np.linalg.inv(realized)
        return from_realized(self.group, inv, self.source_rank, self.target_rank, self.fiber_dim)

    def allclose(self, other, atol=1e-12):
        keys = set(self.terms) | set(other.terms)
        zero = np.zeros(self.shape)
        return all(np.allclose(self.terms.get(g, zero), other.terms.get(g, zero), atol=atol)
                   for g in keys)

    def max_abs(self):
        return max((float(np.abs(m).max()) for m in self.terms.values() if m.size), default=0.0)

    def norm_bound(self):
        """Coarse bound for the operator norm: sum of the blocks' spectral norms."""
        return float(sum(np.linalg.norm(m, 2) for m in self.terms.values() if m.size))

    def entry_block(self, row, col, g):
        d = self.fiber_dim
        m = self.terms.get(g)
        if m is None:
            return np.zeros((d, d), dtype=complex)
        return m[row * d:(row + 1) * d, col * d:(col + 1) * d]

    def __repr__(self):
        return (f"EquivariantOperator({self.group.kind}, {self.target_rank}x{self.source_rank}, "
                f"d={self.fiber_dim}, support={sorted(self.terms)})")


def from_realized(group, matrix, target_rank, source_rank, fiber_dim):
    """Read the group algebra coefficients off a realized equivariant matrix."""
    n = group.size
    d = fiber_dim
    m6 = np.asarray(matrix).reshape(target_rank, n, d, source_rank, n, d)
    e = group.identity
    terms = {}
    for g in range(n):
        # column of the identity element: L_g e_e = e_g
        blk = m6[:, g, :, :, e, :].reshape(target_rank * d, source_rank * d)
        if np.any(np.abs(blk) > 1e-14):
            terms[g] = blk
    return EquivariantOperator(group, source_rank, target_rank, fiber_dim, terms)


# ---------------------------------------------------------------- realization

class Realization(NamedTuple):
    matrix: np.ndarray = None
    symbol: Callable = None
    grid: np.ndarray = None


def realize(op):
    """Finite groups: the regular representation matrix. Integers: M(theta) and a grid."""
    if op.group.is_finite:
        n = op.group.size
        mats = op.group.regular_matrices()
        p, q = op.shape
        d = op.fiber_dim
        out = np.zeros((op.target_rank, n, d, op.source_rank, n, d), dtype=complex)
        for g, a in op.terms.items():
            a4 = a.reshape(op.target_rank, d, op.source_rank, d)
            out += np.einsum("xy,iajb->ixajyb", mats[g], a4)
        return out.reshape(p * n, q * n)
    theta, _, _ = quad.graded_rule([], 8)
    return Realization(symbol=lambda t: symbol(op, t), grid=theta)


def symbol(op, theta):
    """M(theta) = sum_g A_g e^{i g theta}, batched over an array of angles.

    For Z/n only the angles 2 pi k / n are meaningful.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.zeros((theta.size,) + op.shape, dtype=complex)
    for g, a in op.terms.items():
        out += np.exp(1j * g * theta)[:, None, None] * a[None]
    return out


def _trace_scale(group):
    return group.size if group.is_finite else group.finite_factor


def _finite_fibers(op):
    """Matrices whose joint spectrum is that of the realization, with weights."""
    g = op.group
    if g.kind == "finite_cyclic":
        n = g.order
        theta = 2 * np.pi * np.arange(n) / n
        return symbol(op, theta), 1.0 / n
    return realize(op)[None], 1.0 / g.size


def _svals(batch):
    if batch.shape[1] == 0 or batch.shape[2] == 0:
        return np.zeros((batch.shape[0], 0))
    return np.linalg.svd(batch, compute_uv=False)


# ---------------------------------------------------------------- traces

def vn_trace(op, positivity_check=False, tol=1e-9):
    """von Neumann trace of a square operator."""
    if not op.is_square:
        raise ValueError("trace needs a square operator")
    if positivity_check:
        _check_positive(op, tol)
    if op.group.is_finite:
        fibers, w = _finite_fibers(op)
        value = w * np.trace(fibers, axis1=1, axis2=2).sum()
    else:
        # trigonometric polynomial: midpoint rule is exact past the top frequency
        top = max((abs(k) for k in op.terms), default=0)
        n = 2 * top + 2
        theta = (np.arange(n) + 0.5) * (2 * np.pi / n)
        value = np.trace(symbol(op, theta), axis1=1, axis2=2).mean() / op.group.finite_factor
    if abs(value.imag) <= 1e-12 * max(1.0, abs(value.real)):
        return float(value.real)
    return complex(value)


def _check_positive(op, tol):
    if not op.adjoint().allclose(op, atol=tol):
        raise ValueError("operator is not self-adjoint")
    if op.group.is_finite:
        fibers, _ = _finite_fibers(op)
    else:
        fibers = symbol(op, np.linspace(0, 2 * np.pi, 257)[:-1])
    lo = np.linalg.eigvalsh(0.5 * (fibers + fibers.conj().transpose(0, 2, 1))).min()
    if lo < -tol * max(1.0, op.norm_bound()):
        raise ValueError(f"operator is not positive (eigenvalue {lo:.3e})")


# ---------------------------------------------------------------- spectra on Z

def _generic_rank(op, tol=KERNEL_TOL):
    """Rank of M(theta) at generic angles (rank drops happen on a finite set)."""
    if not op.terms:
        return 0
    angles = np.array([0.3141592, 1.2345678, 2.7182818, 3.9, 5.1234567])
    sv = _svals(symbol(op, angles))
    if sv.shape[1] == 0:
        return 0
    smax = sv.max()
    if smax == 0:
        return 0
    return int(max(np.sum(row > tol * smax) for row in sv))


def _norm_estimate(op):
    if not op.terms:
        return 0.0
    sv = _svals(symbol(op, np.linspace(0, 2 * np.pi, 513)[:-1]))
    return float(sv.max()) if sv.size else 0.0


def _singular_angles(op, rank):
    if rank == 0:
        return []
    scale = _norm_estimate(op)

    def smallest(theta):
        return _svals(symbol(op, theta))[:, rank - 1]

    return quad.find_singular_angles(smallest, scale)


@dataclass
class FKResult:
    log_det: float
    determinant_class: bool
    error_estimate: float = 0.0
    converged: bool = True

    @property
    def det(self):
        return math.exp(self.log_det) if self.determinant_class else float("nan")


def log_fk_det(op, rtol=QUAD_RTOL, tol=KERNEL_TOL, max_nodes=512):
    """log of the Fuglede-Kadison determinant, kernel excluded.

    Finite groups: (1/|G|) sum of log nonzero singular values of the
    realization. Integers: (1/2pi) integral of the sum of logs of the
    generically nonzero singular values of M(theta), by graded midpoint
    quadrature around rank drops.
    """
    if op.group.is_finite:
        fibers, w = _finite_fibers(op)
        sv = _svals(fibers).ravel()
        if sv.size == 0 or sv.max() == 0:
            return FKResult(0.0, True)
        keep = sv[sv > tol * sv.max()]
        return FKResult(float(w * np.sum(np.log(keep))), True)

    rank = _generic_rank(op, tol)
    if rank == 0:
        return FKResult(0.0, True)
    breaks = _singular_angles(op, rank)

    def integrand(theta):
        sv = _svals(symbol(op, theta))[:, :rank]
        with np.errstate(divide="ignore"):
            return np.log(sv).sum(axis=1)

    floor = -DIVERGENCE_FACTOR * op.source_dim
    value, err, ok, diverged = quad.circle_mean(integrand, breaks, rtol=rtol,
                                                max_nodes=max_nodes, divergence_floor=floor)
    scale = op.group.finite_factor
    if diverged:
        return FKResult(-math.inf, False, math.inf, False)
    return FKResult(value / scale, True, err / scale, ok)


def fk_det(op, **kwargs):
    """Fuglede-Kadison determinant; raises NotDeterminantClass on divergence."""
    res = log_fk_det(op, **kwargs)
    if not res.determinant_class:
        raise NotDeterminantClass("log-determinant integral diverges")
    if not res.converged:
        raise QuadratureError("determinant quadrature did not converge", res.error_estimate)
    return math.exp(res.log_det)


def kernel_dim(op, tol=KERNEL_TOL):
    """vn-dimension of the kernel, i.e. F(0)."""
    if op.group.is_finite:
        fibers, w = _finite_fibers(op)
        sv = _svals(fibers)
        smax = sv.max() if sv.size else 0.0
        ranks = (sv > tol * smax).sum(axis=1) if smax > 0 else np.zeros(fibers.shape[0])
        return float(w * np.sum(fibers.shape[2] - ranks))
    return float(op.source_dim - _generic_rank(op, tol)) / op.group.finite_factor


# ---------------------------------------------------------------- spectral density

class NovikovShubin(NamedTuple):
    alpha: float
    gap: bool
    residual: float = 0.0
    spectral_gap: float = None
    resolved: bool = True

    def __str__(self):
        if self.gap:
            return "inf+"
        if not self.resolved:
            return "unresolved"
        return f"{self.alpha:.6g}"


@dataclass
class SpectralDensity:
    lambdas: np.ndarray
    values: np.ndarray
    kernel_dim: float
    vn_dim: float
    log_integral: float
    determinant_class: bool
    norm: float
    spectral_gap: float = None
    alpha: NovikovShubin = field(default=None)

    @property
    def samples(self):
        return list(zip(self.lambdas.tolist(), self.values.tolist()))

    def to_csv(self, path_or_file):
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "F"])
            for lam, val in zip(self.lambdas, self.values):
                writer.writerow([repr(float(lam)), repr(float(val))])
        finally:
            if own:
                fh.close()


def default_grid(norm, decades=5, per_decade=16):
    if norm <= 0:
        return np.array([0.0, 1.0])
    top = math.log10(norm) + 0.05
    return np.concatenate([[0.0], np.logspace(top - decades, top, decades * per_decade + 1)])


def spectral_density(op, grid=None, nodes_per_panel=64, tol=KERNEL_TOL):
    """F(lambda) = tr_N chi_[0, lambda](|op|) on a sorted nonnegative grid."""
    if op.group.is_finite:
        fibers, w = _finite_fibers(op)
        sv = _svals(fibers)
        extra = max(0, fibers.shape[2] - min(fibers.shape[1:])) * fibers.shape[0]
        flat = sv.ravel()
        smax = float(flat.max()) if flat.size else 0.0
        thresh = tol * smax
        flat = np.where(flat > thresh, flat, 0.0)
        weights = np.full(flat.size, w)
        extra_weight = extra * w
        scale = 1.0
        nonzero = flat[flat > 0]
        log_int = float(w * np.sum(np.log(nonzero))) if nonzero.size else 0.0
        gap = 0.5 * float(nonzero.min()) if nonzero.size else math.inf
        det_class = True
    else:
        rank = _generic_rank(op, tol)
        smax = _norm_estimate(op)
        breaks = _singular_angles(op, rank)
        theta, wq, _ = quad.graded_rule(breaks, nodes_per_panel)
        # the generic kernel is exact; the remaining singular values count as nonzero
        sv = _svals(symbol(op, theta))[:, :rank]
        flat = sv.ravel()
        weights = np.repeat(wq / wq.sum(), rank)
        extra_weight = op.source_dim - rank
        scale = op.group.finite_factor
        res = log_fk_det(op, tol=tol)
        log_int = res.log_det
        det_class = res.determinant_class
        nonzero = flat[flat > 0]
        gap = None
        if nonzero.size:
            low = float(nonzero.min())
            # a genuine gap: the smallest generic singular value stays away from 0
            if not breaks and low > 1e-6 * max(smax, 1e-300):
                gap = 0.5 * low
        elif smax == 0 or rank == 0:
            gap = math.inf

    if grid is None:
        grid = default_grid(smax)
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0) or np.any(grid < 0):
        raise ValueError("grid must be sorted and nonnegative")

    order = np.argsort(flat)
    sorted_vals = flat[order]
    cum = np.concatenate([[0.0], np.cumsum(weights[order])])
    idx = np.searchsorted(sorted_vals, grid, side="right")
    values = (cum[idx] + extra_weight) / scale
    kdim = (cum[np.searchsorted(sorted_vals, 0.0, side="right")] + extra_weight) / scale

    sd = SpectralDensity(lambdas=grid, values=values, kernel_dim=float(kdim),
                         vn_dim=op.source_dim / _trace_scale_for_dim(op),
                         log_integral=log_int, determinant_class=det_class, norm=smax,
                         spectral_gap=gap)
    sd.alpha = novikov_shubin(sd)
    return sd


def _trace_scale_for_dim(op):
    return 1 if op.group.is_finite else op.group.finite_factor


def novikov_shubin(sd, min_points=8, flat_tol=1e-12):
    """Growth exponent of F(lambda) - F(0) at 0, or a spectral gap (inf+).

    The slope of log(F - F(0)) against log(lambda) is fitted by least squares
    over the lowest sampled decade holding at least ``min_points`` samples
    with F > F(0).
    """
    lam = np.asarray(sd.lambdas)
    excess = np.asarray(sd.values) - sd.kernel_dim
    pos = lam > 0
    lam, excess = lam[pos], excess[pos]
    if sd.spectral_gap is not None:
        return NovikovShubin(math.inf, True, 0.0, sd.spectral_gap)
    if lam.size == 0:
        return NovikovShubin(math.nan, False, math.nan, None, False)
    if np.all(excess <= flat_tol):
        return NovikovShubin(math.inf, True, 0.0, float(lam[-1]))
    lo = lam[0]
    while lo < lam[-1]:
        window = (lam >= lo) & (lam <= 10 * lo) & (excess > flat_tol)
        if window.sum() >= min_points:
            break
        lo *= 10 ** 0.25
    else:
        return NovikovShubin(math.nan, False, math.nan, None, False)
    if lo > lam[0] and np.any(excess[lam < lo] <= flat_tol) and np.all(excess[lam < lo] <= flat_tol):
        # flat below the first populated decade: a gap that the grid resolves
        gap = float(lam[lam < lo][-1])
        return NovikovShubin(math.inf, True, 0.0, gap)
    x = np.log(lam[window])
    y = np.log(excess[window])
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    return NovikovShubin(float(coef[0]), False, resid, None, True)


# ---------------------------------------------------------------- JSON

def _block_to_json(block):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(block)]


def _block_from_json(data, d):
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    elif arr.ndim == 0:
        arr = arr * np.eye(d)
    if arr.shape != (d, d):
        raise ValueError(f"block has shape {arr.shape}, expected {(d, d)}")
    return arr


def operator_to_dict(op):
    d = op.fiber_dim
    entries = []
    for i in range(op.target_rank):
        for j in range(op.source_rank):
            terms = []
            for g in sorted(op.terms):
                blk = op.entry_block(i, j, g)
                if np.any(blk != 0):
                    terms.append({"g": op.group.label(g), "block": _block_to_json(blk)})
            if terms:
                entries.append({"row": i, "col": j, "terms": terms})
    return {"group": op.group.to_dict(), "source_rank": op.source_rank,
            "target_rank": op.target_rank, "fiber_dim": d, "entries": entries}


def operator_from_dict(data, group=None):
    group = group or GroupSpec.from_dict(data["group"])
    m = int(data["source_rank"])
    mp = int(data["target_rank"])
    d = int(data.get("fiber_dim", 1))
    terms = {}
    for entry in data.get("entries", []):
        i, j = int(entry["row"]), int(entry["col"])
        if not (0 <= i < mp and 0 <= j < m):
            raise ValueError(f"entry ({i}, {j}) outside a {mp}x{m} operator")
        for term in entry["terms"]:
            g = group.element(term["g"])
            blk = _block_from_json(term["block"], d)
            mat = terms.setdefault(g, np.zeros((mp * d, m * d), dtype=complex))
            mat[i * d:(i + 1) * d, j * d:(j + 1) * d] += blk
    return EquivariantOperator(group, m, mp, d, terms)
