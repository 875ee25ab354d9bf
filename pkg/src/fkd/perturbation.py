"""Harmonically perturbed balls and their deficits.

A boundary velocity V on the unit sphere is stored as spherical-harmonic
coefficients per degree (cos/sin pairs on the circle, normalized zonal
Legendre harmonics on the 2-sphere).  The perturbed domain is the radial
graph r = c(t) (1 + t V) with c(t) the exact volume-normalizing scalar, so
the family keeps |Omega(t)| = omega_N and automatically satisfies both
second-order volume constraints; in particular a unit-norm V induces a
constant boundary acceleration with integral (1 - N).

The module provides exact geometric quadrature of perimeter/volume (N = 2
and zonal N = 3), the analytic t^2 coefficients of both deficits, the
Fourier-Bessel field v of the eigenvalue shape derivative together with its
Poisson-system residual, and the second variation of the eigenvalue.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bessel import HalfIntOrder, bessel_j_array, bessel_ratio_cf
from .constants import dimension_params
from .errors import DegenerateDomainError

N2_QUAD_NODES = 2048   # uniform angles, periodic trapezoid (spectral)
N3_QUAD_NODES = 512    # Gauss-Legendre nodes in cos(theta)
STAR_SHAPE_GUARD = 0.5  # require t * max|V| <= this

_PHASES_2D = ("cos", "sin")


@dataclass(frozen=True)
class Mode:
    k: int
    a: float
    phase: str

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("mode degree must be >= 1 (degree 0 breaks the volume constraint)")
        if not math.isfinite(self.a):
            raise ValueError("mode coefficient must be finite")
        if self.phase not in ("cos", "sin", "zonal"):
            raise ValueError(f"unknown phase {self.phase!r}")


@dataclass(frozen=True)
class HarmonicProfile:
    """Boundary velocity V = sum_k a_k Y_k with L2-normalized harmonics."""

    dim: int
    modes: tuple

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        seen = set()
        for m in self.modes:
            if self.dim == 2 and m.phase not in _PHASES_2D:
                raise ValueError("dimension 2 uses cos/sin phases")
            if self.dim >= 3 and m.phase != "zonal":
                raise ValueError("dimension >= 3 uses zonal (Legendre) harmonics")
            key = (m.k, m.phase)
            if key in seen:
                raise ValueError(f"duplicate mode {key}")
            seen.add(key)

    @classmethod
    def single(cls, dim: int, k: int, a: float = 1.0, phase: str | None = None) -> "HarmonicProfile":
        if phase is None:
            phase = "cos" if dim == 2 else "zonal"
        return cls(dim, (Mode(k, a, phase),))

    @classmethod
    def from_modes(cls, dim: int, modes) -> "HarmonicProfile":
        return cls(dim, tuple(Mode(k, a, p) for (k, a, p) in modes))

    def negated(self) -> "HarmonicProfile":
        return HarmonicProfile(self.dim, tuple(Mode(m.k, -m.a, m.phase) for m in self.modes))

    def degree_energies(self) -> dict:
        """Per-degree energy sum a^2 (all formulas depend only on this)."""
        out: dict[int, float] = {}
        for m in self.modes:
            out[m.k] = out.get(m.k, 0.0) + m.a * m.a
        return out

    def l2_norm(self) -> float:
        return math.sqrt(sum(m.a * m.a for m in self.modes))

    def max_degree(self) -> int:
        return max((m.k for m in self.modes), default=0)

    # --- pointwise evaluation -------------------------------------------
    def velocity(self, theta) -> np.ndarray:
        """V at angles theta (polar angle for dim >= 3)."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for m in self.modes:
            out += m.a * _harmonic(self.dim, m.k, m.phase, theta, 0)
        return out

    def velocity_deriv(self, theta, order: int = 1) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for m in self.modes:
            out += m.a * _harmonic(self.dim, m.k, m.phase, theta, order)
        return out

    def max_abs_velocity(self, nodes: int = 4096) -> float:
        theta = np.linspace(0.0, 2.0 * math.pi if self.dim == 2 else math.pi, nodes)
        return float(np.max(np.abs(self.velocity(theta)))) if self.modes else 0.0


def _harmonic(dim: int, k: int, phase: str, theta: np.ndarray, deriv: int) -> np.ndarray:
    """d^deriv/dtheta^deriv of the L2-normalized harmonic of degree k."""
    if dim == 2:
        # d/dtheta advances the phase by pi/2 and brings down a factor k
        shift = deriv * math.pi / 2.0
        trig = np.cos if phase == "cos" else np.sin
        return (k**deriv) / math.sqrt(math.pi) * trig(k * theta + shift)
    # zonal on S^2: ||Y_k||^2 = 2 pi int_{-1}^{1} [norm P_k(u)]^2 du = 1
    norm = math.sqrt((2 * k + 1) / (4.0 * math.pi))
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    u = np.cos(theta)
    if deriv == 0:
        return norm * np.polynomial.legendre.legval(u, coeffs)
    d1 = np.polynomial.legendre.legder(coeffs)
    p1 = np.polynomial.legendre.legval(u, d1)
    if deriv == 1:
        return norm * p1 * (-np.sin(theta))
    if deriv == 2:
        p2 = np.polynomial.legendre.legval(u, np.polynomial.legendre.legder(d1))
        return norm * (p2 * np.sin(theta) ** 2 - p1 * np.cos(theta))
    raise ValueError("derivative order must be 0, 1 or 2")


@dataclass(frozen=True)
class PerturbedBall:
    """Volume-normalized star-shaped domain r = c (1 + t V)."""

    profile: HarmonicProfile
    t: float
    c: float

    @property
    def dim(self) -> int:
        return self.profile.dim

    def rho(self, theta) -> np.ndarray:
        return self.c * (1.0 + self.t * self.profile.velocity(theta))

    def drho(self, theta) -> np.ndarray:
        return self.c * self.t * self.profile.velocity_deriv(theta, 1)

    def d2rho(self, theta) -> np.ndarray:
        return self.c * self.t * self.profile.velocity_deriv(theta, 2)


@dataclass(frozen=True)
class DeficitPair:
    """(delta P, delta lambda) for one domain plus their t^2 coefficients."""

    delta_P: float
    delta_lambda: float
    c_P: float
    c_lambda: float

    @property
    def ratio(self) -> float:
        return self.delta_P / self.delta_lambda if self.delta_lambda > 0 else math.nan


@lru_cache(maxsize=8)
def _gl_cos_nodes(n: int):
    u, w = np.polynomial.legendre.leggauss(n)
    return u, w, np.arccos(u)


def _raw_volume(profile: HarmonicProfile, t: float) -> float:
    """|{r < 1 + t V}| by the module's reference quadrature."""
    if profile.dim == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, N2_QUAD_NODES, endpoint=False)
        rho = 1.0 + t * profile.velocity(theta)
        return math.pi * float(np.mean(rho * rho))
    if profile.dim == 3:
        u, w, theta = _gl_cos_nodes(N3_QUAD_NODES)
        rho = 1.0 + t * profile.velocity(theta)
        return 2.0 * math.pi / 3.0 * float(np.sum(w * rho**3))
    raise ValueError("exact geometry supports dimensions 2 and 3 only")


def normalize_volume(profile: HarmonicProfile, t: float) -> PerturbedBall:
    """Scale r = 1 + t V so the domain has exactly the unit-ball volume."""
    t = float(t)
    if t < 0.0:
        raise ValueError("t must be >= 0; negate the profile coefficients instead")
    if profile.modes:
        span = 2.0 * math.pi if profile.dim == 2 else math.pi
        theta = np.linspace(0.0, span, 4096)
        if float(np.min(1.0 + t * profile.velocity(theta))) <= 0.0:
            raise DegenerateDomainError("1 + t V touched zero; domain degenerates")
        vmax = profile.max_abs_velocity()
        if t * vmax > STAR_SHAPE_GUARD:
            raise ValueError(
                f"t * max|V| = {t * vmax:.3f} exceeds the star-shape guard {STAR_SHAPE_GUARD}"
            )
    if not profile.modes or t == 0.0:
        return PerturbedBall(profile, t, 1.0)
    dim = profile.dim
    omega = dimension_params(dim).omega_N
    c = (omega / _raw_volume(profile, t)) ** (1.0 / dim)
    return PerturbedBall(profile, t, c)


def geometry_exact(ball: PerturbedBall) -> tuple:
    """(perimeter, volume, delta_P) by spectrally accurate quadrature."""
    dim = ball.dim
    omega = dimension_params(dim).omega_N
    if dim == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, N2_QUAD_NODES, endpoint=False)
        rho = ball.rho(theta)
        drho = ball.drho(theta)
        per = 2.0 * math.pi * float(np.mean(np.sqrt(rho * rho + drho * drho)))
        vol = math.pi * float(np.mean(rho * rho))
    elif dim == 3:
        u, w, theta = _gl_cos_nodes(N3_QUAD_NODES)
        rho = ball.rho(theta)
        drho = ball.drho(theta)
        per = 2.0 * math.pi * float(np.sum(w * rho * np.sqrt(rho * rho + drho * drho)))
        vol = 2.0 * math.pi / 3.0 * float(np.sum(w * rho**3))
    else:
        raise ValueError("exact geometry supports dimensions 2 and 3 only")
    delta_p = per / (dim * omega ** (1.0 / dim) * vol ** ((dim - 1.0) / dim)) - 1.0
    return per, vol, delta_p


def mode_deficit_brackets(dim: int, k: int) -> tuple:
    """Per-mode brackets (l_k^2 - N^2/4, l_k + N/2 - z rho_k) of the deficits."""
    p = dimension_params(dim)
    ell = k + dim / 2.0 - 1.0
    rho = bessel_ratio_cf(HalfIntOrder.for_mode(dim, k), p.z_N)
    return ell * ell - dim * dim / 4.0, ell + dim / 2.0 - p.z_N * rho


def deficit_coeffs(profile: HarmonicProfile) -> tuple:
    """Analytic t^2 coefficients (c_P, c_lambda) of the two deficits.

    Degree-1 terms are translations: they contribute exactly zero to c_P and
    are excluded from both sums.
    """
    dim = profile.dim
    p = dimension_params(dim)
    c_p = 0.0
    c_l = 0.0
    for k, energy in sorted(profile.degree_energies().items()):
        if k < 2:
            continue
        per_bracket, lam_bracket = mode_deficit_brackets(dim, k)
        c_p += energy * per_bracket
        c_l += energy * lam_bracket
    c_p /= 2.0 * dim * p.omega_N
    c_l *= (p.G_N / p.z_N) ** 2
    return c_p, c_l


def analytic_deficits(profile: HarmonicProfile, t: float) -> DeficitPair:
    c_p, c_l = deficit_coeffs(profile)
    return DeficitPair(c_p * t * t, c_l * t * t, c_p, c_l)


# ---------------------------------------------------------------------------
# the shape-derivative field v
# ---------------------------------------------------------------------------

def _mode_radial(dim: int, k: int, r: np.ndarray) -> np.ndarray:
    """r^{1-N/2} J_{l_k}(z r) / J_{l_k}(z), with the r -> 0 limit 0 for k >= 1."""
    p = dimension_params(dim)
    order = HalfIntOrder.for_mode(dim, k)
    denom = float(bessel_j_array(order, np.array([p.z_N]))[0])
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0.0
    rp = r[pos]
    out[pos] = rp ** (1.0 - dim / 2.0) * bessel_j_array(order, p.z_N * rp) / denom
    return out


def v_field(profile: HarmonicProfile, r, xi) -> np.ndarray:
    """The field v(r, xi) = G_N r^{1-N/2} sum_k a_k J_{l_k}(z r)/J_{l_k}(z) Y_k(xi).

    Solves the radial-spectral Poisson system with boundary trace
    v(1, xi) = G_N V(xi); bounded near r = 0.
    """
    dim = profile.dim
    g = dimension_params(dim).G_N
    r = np.asarray(r, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r_b, xi_b = np.broadcast_arrays(r, xi)
    if np.any(r_b < 0.0) or np.any(r_b > 1.0):
        raise ValueError("radius must lie in [0, 1]")
    out = np.zeros(r_b.shape)
    for m in profile.modes:
        out += m.a * _mode_radial(dim, m.k, r_b) * _harmonic(dim, m.k, m.phase, xi_b, 0)
    return g * out


def boundary_radial_derivative(profile: HarmonicProfile, xi) -> np.ndarray:
    """dv/dr at r = 1: G_N sum_k [k - z rho_{l_k}] a_k Y_k(xi)."""
    dim = profile.dim
    p = dimension_params(dim)
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    for m in profile.modes:
        rho = bessel_ratio_cf(HalfIntOrder.for_mode(dim, m.k), p.z_N)
        out += m.a * (m.k - p.z_N * rho) * _harmonic(dim, m.k, m.phase, xi, 0)
    return p.G_N * out


def poisson_residual(profile: HarmonicProfile, r_grid=None, n_xi: int = 96,
                     fd_order_step: float | None = None) -> float:
    """Max residual of the Poisson system over an interior grid.

    The radial operator -r^{1-N} d/dr (r^{N-1} dv/dr) is applied per mode
    with fourth-order centered differences in r (stencils may reach past
    r = 1, where the radial factor continues analytically); the
    Laplace-Beltrami term is applied analytically as -k(k+N-2) per mode.
    """
    dim = profile.dim
    if dim not in (2, 3):
        raise ValueError("residual check supports dimensions 2 and 3 only")
    if not profile.modes:
        return 0.0
    if r_grid is None:
        r_grid = np.linspace(0.05, 1.0, 400)
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid <= 0.0):
        raise ValueError("grid must avoid r = 0")
    steps = np.diff(r_grid)
    if r_grid.size < 2 or np.max(np.abs(steps - steps[0])) > 1e-12 * steps[0]:
        raise ValueError("grid must be uniform")
    h = fd_order_step if fd_order_step is not None else float(steps[0])
    p = dimension_params(dim)
    z2 = p.z_N**2
    span = 2.0 * math.pi if dim == 2 else math.pi
    xi = np.linspace(0.0, span, n_xi, endpoint=(dim == 3))
    res_field = np.zeros((r_grid.size, n_xi))
    for m in profile.modes:
        vals = {s: _mode_radial(dim, m.k, r_grid + s * h) for s in (-2, -1, 0, 1, 2)}
        d2 = (-vals[-2] + 16 * vals[-1] - 30 * vals[0] + 16 * vals[1] - vals[2]) / (12 * h * h)
        d1 = (vals[-2] - 8 * vals[-1] + 8 * vals[1] - vals[2]) / (12 * h)
        lb = m.k * (m.k + dim - 2)
        res_r = -(d2 + (dim - 1.0) / r_grid * d1) + lb / r_grid**2 * vals[0] - z2 * vals[0]
        res_field += m.a * res_r[:, None] * _harmonic(dim, m.k, m.phase, xi, 0)[None, :]
    return p.G_N * float(np.max(np.abs(res_field)))


def second_variation(profile: HarmonicProfile) -> float:
    """lambda''(0) = 2 G_N^2 sum_{k>=2} a_k^2 [k - z rho_{l_k} + N - 1].

    Degree-1 terms are omitted: their bracket vanishes identically because
    rho_{l_1} = N/z (translation neutrality), which the tests assert.
    """
    dim = profile.dim
    p = dimension_params(dim)
    total = 0.0
    for k, energy in sorted(profile.degree_energies().items()):
        if k < 2:
            continue
        rho = bessel_ratio_cf(HalfIntOrder.for_mode(dim, k), p.z_N)
        total += energy * (k - p.z_N * rho + dim - 1.0)
    return 2.0 * p.G_N**2 * total


def first_variation(profile: HarmonicProfile) -> float:
    """lambda'(0) = -G_N^2 int V dsigma (zero for every admissible profile)."""
    dim = profile.dim
    p = dimension_params(dim)
    if not profile.modes:
        return 0.0
    if dim == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, N2_QUAD_NODES, endpoint=False)
        integral = 2.0 * math.pi * float(np.mean(profile.velocity(theta)))
    elif dim == 3:
        u, w, theta = _gl_cos_nodes(N3_QUAD_NODES)
        integral = 2.0 * math.pi * float(np.sum(w * profile.velocity(theta)))
    else:
        # harmonics with k >= 1 integrate to zero degree by degree
        integral = 0.0
    return -p.G_N**2 * integral


# ---------------------------------------------------------------------------
# wire format
# ---------------------------------------------------------------------------

def profile_to_json(profile: HarmonicProfile) -> dict:
    return {
        "dim": profile.dim,
        "modes": [{"k": m.k, "a": m.a, "phase": m.phase} for m in profile.modes],
    }


def profile_from_json(obj) -> HarmonicProfile:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        dim = int(obj["dim"])
        modes = tuple(Mode(int(m["k"]), float(m["a"]), str(m["phase"])) for m in obj["modes"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed profile object: {exc}") from exc
    return HarmonicProfile(dim, modes)
