"""Optimal constant of the sharp quantitative Faber-Krahn inequality.

Library layout:

- ``bessel``        first-kind Bessel machinery on the half-integer lattice
- ``constants``     dimensional constants, the deficit-ratio sequence Q_k
- ``perturbation``  harmonically perturbed balls, exact geometry, field v
- ``eigensolver``   2D Dirichlet Laplacian on star-shaped domains
- ``cli``           the ``fkd`` command line harness
"""

from .bessel import (
    HalfIntOrder,
    ZeroBracket,
    bessel_j,
    bessel_j_prime,
    bessel_ratio_cf,
    first_zero,
    radial_norm_integral,
)
from .constants import (
    DimensionParams,
    QTable,
    dimension_params,
    faber_krahn_constant,
    finale_criterion,
    q_convexity_report,
    q_value,
)

__version__ = "0.1.0"
