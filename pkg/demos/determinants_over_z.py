"""Fuglede-Kadison determinants of Laurent polynomials over Z and Z/n.

Over the integers a Laurent polynomial acts on l^2(Z) by convolution, and its
determinant is the Mahler measure. Over Z/n the same symbol becomes a
circulant matrix, and the determinant is the n-th root of the product of its
nonzero singular values. This script compares the two.
"""
import math

from l2torsion import vn_core as vn
from l2torsion.vn_core import EquivariantOperator, GroupSpec

# z - 2 has its root outside the unit circle, so the determinant is 2.
shift = {1: 1.0, 0: -2.0}
print("det(z - 2) over Z       :", vn.fk_det(EquivariantOperator.laurent(shift)))

# The discrete Laplacian 2 - z - 1/z vanishes at z = 1. It is still of
# determinant class, with Mahler measure 1.
lap = {0: 2.0, 1: -1.0, -1: -1.0}
print("det(2 - z - 1/z) over Z :", vn.fk_det(EquivariantOperator.laurent(lap)))

# The spectral density near zero shows how singular the operator is.
sd = vn.spectral_density(EquivariantOperator.laurent(lap))
print("Novikov-Shubin alpha    :", sd.alpha)

# Finite quotients. The shift part converges at once; the Laplacian part
# converges like n^(2/n), since its nonzero eigenvalues multiply to n^2.
print()
print(f"{'n':>6} {'z - 2':>12} {'2 - z - 1/z':>14} {'n^(2/n)':>10}")
for n in (4, 16, 64, 256, 1024, 4096):
    G = GroupSpec.cyclic(n)
    a = vn.fk_det(EquivariantOperator.laurent(shift, group=G))
    b = vn.fk_det(EquivariantOperator.laurent(lap, group=G))
    print(f"{n:>6} {a:>12.8f} {b:>14.8f} {n ** (2 / n):>10.6f}")

# Reaching 1e-3 on the Laplacian needs 2 log(n) / n < 1e-3.
n = 4096
while 2 * math.log(n) / n >= 1e-3:
    n *= 2
print("\nfirst power of two with n^(2/n) - 1 < 1e-3:", n)
