"""Closed-form dimensional constants and the deficit-ratio sequence Q_k.

Everything here is assembled from the `bessel` primitives: the first zero
z_N = j_{N/2-1}, the unit-ball volume omega_N, the first eigenvalue on the
unit ball z_N^2, the boundary gradient modulus G_N, the optimal constant
C_N, and the mode-wise ratio sequence Q_k whose k = 2 entry equals C_N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .bessel import (
    HalfIntOrder,
    bessel_j_prime,
    bessel_ratio_cf,
    first_zero,
    radial_norm_integral,
)

MAX_DIMENSION = 100
MAX_DIMENSION_CRITERION = 200
MAX_MODE = 1000

# Reference first zeros j_{N/2-1} for low dimensions (well-known tabulated
# values, used by the validation command as an external yardstick).
KNOWN_FIRST_ZEROS = {
    2: 2.404826,
    3: math.pi,
    4: 3.831706,
    5: 4.4934095,
    6: 5.135622,
    7: 5.763459,
    8: 6.380162,
    9: 6.987932,
}


@dataclass(frozen=True)
class DimensionParams:
    """Constants attached to the unit ball of R^N."""

    dim: int
    z_N: float           # first zero j_{N/2-1}
    omega_N: float       # unit-ball volume pi^{N/2}/Gamma(N/2+1)
    lambda_ball: float   # first Dirichlet eigenvalue z_N^2
    G_N: float           # boundary gradient modulus (taken positive)
    radial_norm: float   # int_0^{z_N} r J_{N/2-1}(r)^2 dr


@dataclass(frozen=True)
class QTable:
    """Q_k for k = 2..kmax with c_N = Q_2."""

    dim: int
    entries: tuple  # ((k, Q_k), ...) sorted by k
    c_N: float


@dataclass(frozen=True)
class QConvexityReport:
    table: QTable
    first_diffs: tuple   # Q_{k+1} - Q_k, k = 2..kmax-1
    second_diffs: tuple  # Q_{k+1} - 2 Q_k + Q_{k-1}, k = 3..kmax-1
    monotone: bool = True
    convex: bool = True
    violations: tuple = field(default_factory=tuple)


def _check_dim(dim: int, limit: int = MAX_DIMENSION):
    if not isinstance(dim, (int,)) or isinstance(dim, bool):
        raise ValueError("dimension must be an integer")
    if dim < 2 or dim > limit:
        raise ValueError(f"dimension must be in [2, {limit}]")


@lru_cache(maxsize=None)
def dimension_params(dim: int) -> DimensionParams:
    _check_dim(dim)
    order = HalfIntOrder.from_dimension(dim)
    z = first_zero(order)
    omega = math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)
    rad = radial_norm_integral(order)
    jp = bessel_j_prime(order, z)
    # J'_{N/2-1}(z_N) < 0; only G_N^2 enters downstream, keep the modulus.
    g = abs(z * z * jp) / math.sqrt(dim * omega * rad)
    return DimensionParams(dim, z, omega, z * z, g, rad)


def faber_krahn_constant(dim: int) -> float:
    """The optimal constant C_N = N(N+1) I / (2 (z J')^2 (z^2 - N))."""
    _check_dim(dim)
    p = dimension_params(dim)
    order = HalfIntOrder.from_dimension(dim)
    jp = bessel_j_prime(order, p.z_N)
    return dim * (dim + 1) * p.radial_norm / (
        2.0 * (p.z_N * jp) ** 2 * (p.z_N**2 - dim)
    )


def mode_ratio(dim: int, k: int) -> float:
    """J_{l_k+1}(z_N)/J_{l_k}(z_N) through the continued fraction."""
    p = dimension_params(dim)
    return bessel_ratio_cf(HalfIntOrder.for_mode(dim, k), p.z_N)


def q_value(dim: int, k: int) -> float:
    """Limiting deficit ratio for a pure degree-k boundary perturbation.

    Q_k = (z^2 / (2 N omega G^2)) (l_k^2 - N^2/4) / (l_k + N/2 - z rho_k)
    with rho_k the continued-fraction Bessel ratio at z = z_N.
    """
    _check_dim(dim)
    if k < 2:
        # k = 0 breaks the volume constraint, k = 1 is a pure translation
        raise ValueError("mode degree must be >= 2")
    if k > MAX_MODE:
        raise ValueError(f"mode degree must be <= {MAX_MODE}")
    p = dimension_params(dim)
    ell = k + dim / 2.0 - 1.0
    rho = mode_ratio(dim, k)
    denom = ell + dim / 2.0 - p.z_N * rho
    if not denom > 0.0:
        raise ArithmeticError(f"nonpositive Q denominator at N={dim}, k={k}")
    pref = p.z_N**2 / (2.0 * dim * p.omega_N * p.G_N**2)
    return pref * (ell * ell - dim * dim / 4.0) / denom


def finale_criterion(dim: int) -> float:
    """(z^2 - 2) N^2 + 5 z^2 N - 2 z^4; positive exactly when Q_2 < Q_3."""
    _check_dim(dim, MAX_DIMENSION_CRITERION)
    z = first_zero(HalfIntOrder.from_dimension(dim))
    z2 = z * z
    return (z2 - 2.0) * dim * dim + 5.0 * z2 * dim - 2.0 * z2 * z2


def q_convexity_report(dim: int, kmax: int) -> QConvexityReport:
    """Q_2..Q_kmax with first/second differences and monotonicity flags.

    Violations are reported, not raised: monotonicity below -1e-12 and
    convexity below -1e-10 are flagged by k.
    """
    _check_dim(dim)
    if kmax < 4:
        raise ValueError("kmax must be >= 4")
    ks = list(range(2, kmax + 1))
    qs = [q_value(dim, k) for k in ks]
    firsts = tuple(qs[i + 1] - qs[i] for i in range(len(qs) - 1))
    seconds = tuple(qs[i + 1] - 2.0 * qs[i] + qs[i - 1] for i in range(1, len(qs) - 1))
    violations = []
    for i, d in enumerate(firsts):
        if d < -1e-12:
            violations.append(("monotone", ks[i]))
    for i, d in enumerate(seconds):
        if d < -1e-10:
            violations.append(("convex", ks[i + 1]))
    table = QTable(dim, tuple(zip(ks, qs)), qs[0])
    return QConvexityReport(
        table,
        firsts,
        seconds,
        monotone=not any(v[0] == "monotone" for v in violations),
        convex=not any(v[0] == "convex" for v in violations),
        violations=tuple(violations),
    )
