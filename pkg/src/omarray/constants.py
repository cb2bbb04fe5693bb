"""Physical constants and the numerical tolerance table used across the package."""

from scipy import constants as _sc

HBAR = _sc.hbar
K_B = _sc.k
TWO_PI = 2.0 * _sc.pi

# Exact algebraic identities (determinants, flux unitarity of a single element).
TOL_IDENTITY = 1e-12
# Agreement between two independent constructions of the same quantity.
TOL_CROSSCHECK = 1e-10
# Flux balance of cascaded (N-element) spectra.
TOL_CASCADE_UNITARITY = 1e-9
# Eigendecomposition vs repeated squaring for matrix powers.
TOL_POWER_PATHS = 1e-8
# Occupation fractions must sum to one.
TOL_FRACTIONS = 1e-9
# Time-domain excitation ledger, relative to injected energy.
TOL_LEDGER = 1e-6

# Entries above this magnitude switch cascades to log-scaled bookkeeping.
OVERFLOW_GUARD = 1e150
# |M22| below this (after scaling) is treated as a numerical failure.
UNDERFLOW_GUARD = 1e-300

# Time step must not exceed this fraction of 1/kappa.
DT_KAPPA_LIMIT = 0.02
# RK4 is stable for |lambda| dt up to ~2.78 on the real axis; keep margin.
RK4_STABILITY_LIMIT = 2.5
