"""Analytic, metric and combinatorial torsion of the interval and the circle.

On an interval the three torsions differ, and the relative torsion R is fixed
by the Euler characteristic of the boundary. On the circle the boundary is
empty and the analytic side matches the Morse-Smale side.
"""
import math

import numpy as np

from l2torsion import analytic_1d as an1
from l2torsion import relative_anomaly as ra

# Interval [0, l] with the flat metric.
print(f"{'l':>8} {'log T_an':>12} {'log T_met':>12} {'log T_ms':>10} {'R':>12}")
for l in (1.0, 2.0, math.e ** 2):
    rep = ra.interval_report(an1.OneDSystem.interval(0.0, l))
    print(f"{l:>8.4f} {rep.logT_an:>12.8f} {rep.logT_met:>12.8f} "
          f"{rep.logT_ms:>10.4f} {rep.R:>12.8f}")

# R does not depend on l. It equals the boundary term for chi = 2.
print("boundary term:", ra.main_theorem_rhs(2, 1, 0.0), "= -(log 2)/2")

# Circle of length 1 with holonomy rho. Both sides give -|log|rho||/2.
print()
print(f"{'rho':>18} {'analytic':>12} {'Morse-Smale':>12} {'gap':>9}")
for rho in (1.0, np.exp(1j * math.pi / 3), -1.0, 2.0):
    ct = an1.circle_torsion(an1.OneDSystem.circle(1.0, rho))
    print(f"{str(np.round(rho, 4)):>18} {ct.log_an:>12.8f} {ct.log_ms:>12.8f} "
          f"{ct.residual:>9.1e}")

# A metric that is not flat shows up through the theta form.
sys = an1.OneDSystem.interval(0.0, 2.0, metric=lambda x: np.array([[math.exp(1.5 * x)]]))
th = an1.theta_1d(sys)
print("\ntheta integral for h = exp(1.5 x) on [0, 2]:", round(th.integral, 10))
