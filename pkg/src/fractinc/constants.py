"""Frozen constants: analytic values plus one-time empirical calibrations.

The hidden absolute constants of the incidence/Frostman statements are not
stated anywhere in closed form; they are measured once on a reference suite by
scripts/calibrate.py and frozen here.  Analytic values carry their derivation
in comments.
"""

import numpy as np

# Mollifier profile mass: integral over R^d of the bump that equals
# (C*delta)^-d inside radius 3*C*delta and tapers linearly to 0 at 4*C*delta.
# In units where C*delta = 1: v_d * (3^d + d * int_3^4 u^(d-1) (4-u) du) with
# v_d the unit-ball volume; independent of C and delta.
#   d=1: 7         d=2: 37*pi/3        d=3: 175*pi/3
MOLLIFIER_MASS = {
    1: 7.0,
    2: 37.0 * np.pi / 3.0,
    3: 175.0 * np.pi / 3.0,
}

# Accepted bracket for the lattice-sampled mass of a mollified cloud
# (center-sampling quadrature error at h <= C*delta/4 stays well inside 1%).
MOLLIFIER_MASS_RTOL = 0.01

# Duality: largest r with B(V0, r) inside D(B(1)) is 1/sqrt(2) in every d
# (minimize (|m|+|c|)/sqrt(1+m^2) over m^2+c^2=1); frozen at half, rounded down.
DUALITY_RADIUS = 0.35

# ---------------------------------------------------------------------------
# Empirical calibrations (scripts/calibrate.py; see that file for the runs).
# ---------------------------------------------------------------------------

# Grassmannian ball regularity: fraction of invariant samples within metric
# distance r of a fixed subspace is >= c * r^(n(d-n)); c = half the smallest
# observed ratio over r in {1/2, 1/4, 1/8, 1/16}.
GRASSMANN_BALL_C = {
    (2, 1): 0.32,
    (3, 1): 0.24,
    (3, 2): 0.24,
}

# Frostman best_constant ceilings for the sharpness construction's point set,
# frozen at 10x the k=6 value per (s, t).
SHARPNESS_FROSTMAN_BOUND = {
    (0.5, 1.5): 74.20,
    (0.25, 1.25): 60.33,
}

# Single constant A of the three-case ball-count bound |P cap B| <= A * delta^(alpha t - t)
# across alpha in a 10-point grid and k in {6..10}.
SHARPNESS_BALL_A = 3.9

# Frozen ratio ceiling for the incidence bound check, per (d, n):
# |I| <= INCIDENCE_A[(d,n)] * bound_rhs(eps=0.1).
INCIDENCE_A = {
    (2, 1): 3.95,
}

# Every sharpness point has at least MIN_LINES_C * delta^-s lines within delta.
MIN_LINES_C = 1.0

# Bilipschitz constants of the duality map on B(R), frozen per (R, d) with a
# 1.2 safety factor over the measured extremes; nondecreasing in R.
DUALITY_BILIPSCHITZ_L = {
    (1.0, 2): 2.20,
    (2.0, 2): 4.81,
    (1.0, 3): 2.01,
    (2.0, 3): 4.65,
}

# Bracket for (projection L^2 integral) / (Riesz energy of order n).
RIESZ_RATIO_BRACKET = (0.304, 0.338)
