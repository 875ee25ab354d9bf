"""Bessel functions of the first kind on the half-integer order lattice.

Self-contained evaluation (no scipy.special): ascending power series where it
is cancellation-free, upward recurrence from closed trigonometric seeds for
half-odd orders below the turning point, and a downward Miller-style
recurrence everywhere else (trig-anchored for half-odd orders, unit-sum
normalized for integer orders).  On top of the point evaluator: the
derivative via the standard recurrence, the ratio J_{nu+1}/J_nu as a
continued fraction (modified Lentz), the first positive zero j_nu from a
certified bracket, and the radial normalization integral
int_0^{j_nu} r J_nu(r)^2 dr.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BracketError, ConvergenceError

MAX_ORDER = 200.0  # supported nu range; evaluation is validated on [0, 4*nu+50]

_TINY = 1e-300
_RESCALE = 1e250


@dataclass(frozen=True)
class HalfIntOrder:
    """Order nu = twice_order/2, stored exactly as an integer twice-value.

    The two orders the library cares about, nu = N/2 - 1 and
    l_k = k + N/2 - 1, both live on this lattice, and unit steps
    l_{k+1} - l_k = 1 are exact on twice_order.
    """

    twice_order: int

    def __post_init__(self):
        if not isinstance(self.twice_order, (int, np.integer)):
            raise TypeError("twice_order must be an integer")
        if self.twice_order < 0:
            raise ValueError("order must be >= 0")

    @property
    def nu(self) -> float:
        return self.twice_order / 2.0

    @property
    def is_integer(self) -> bool:
        return self.twice_order % 2 == 0

    def shift(self, steps: int = 1) -> "HalfIntOrder":
        """Order nu + steps (exact lattice arithmetic)."""
        return HalfIntOrder(self.twice_order + 2 * steps)

    @classmethod
    def from_nu(cls, nu: float) -> "HalfIntOrder":
        twice = round(2.0 * nu)
        if abs(2.0 * nu - twice) > 1e-12:
            raise ValueError(f"order {nu} is not on the half-integer lattice")
        return cls(int(twice))

    @classmethod
    def from_dimension(cls, dim: int) -> "HalfIntOrder":
        """nu = N/2 - 1 for the first eigenfunction of the unit N-ball."""
        if dim < 2:
            raise ValueError("dimension must be >= 2")
        return cls(dim - 2)

    @classmethod
    def for_mode(cls, dim: int, k: int) -> "HalfIntOrder":
        """l_k = k + N/2 - 1, the radial order attached to spherical degree k."""
        if dim < 2:
            raise ValueError("dimension must be >= 2")
        if k < 0:
            raise ValueError("mode degree must be >= 0")
        return cls(2 * k + dim - 2)


@dataclass(frozen=True)
class ZeroBracket:
    """Certified enclosure lower <= j_nu <= upper."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError("bracket requires lower <= upper")


def _as_order(order) -> HalfIntOrder:
    if isinstance(order, HalfIntOrder):
        return order
    return HalfIntOrder.from_nu(float(order))


def _check_order_range(nu: float):
    if nu > MAX_ORDER:
        raise ValueError(f"order {nu} above supported range {MAX_ORDER}")


def _series_threshold(nu: float) -> float:
    # Terms of the ascending series decrease from the start once
    # (x/2)^2 <= nu+1, so there is no cancellation there; below x=9 the
    # worst-case amplification still leaves ~13 correct digits.
    return max(9.0, 2.0 * math.sqrt(nu + 1.0))


def _miller_start(nu: float, x: float) -> int:
    big = max(nu, x)
    return int(math.ceil(big + 20.0 + 5.0 * math.sqrt(big + 10.0)))


def _half_seeds(x: float) -> tuple[float, float]:
    """Exact J_{1/2}, J_{3/2} from trigonometric closed forms."""
    c = math.sqrt(2.0 / (math.pi * x))
    return c * math.sin(x), c * (math.sin(x) / x - math.cos(x))


# ---------------------------------------------------------------------------
# scalar evaluation paths
# ---------------------------------------------------------------------------

def _series_scalar(nu: float, x: float) -> float:
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    half = 0.5 * x
    if nu <= 140.0:
        pref = half**nu / math.gamma(nu + 1.0)
    else:
        lp = nu * math.log(half) - math.lgamma(nu + 1.0)
        if lp < -745.0:
            return 0.0
        pref = math.exp(lp)
    y = half * half
    term = 1.0
    total = 1.0
    for j in range(1, 500):
        term *= -y / (j * (nu + j))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return pref * total


def _upward_scalar(twice: int, x: float) -> float:
    # half-odd order, nu <= x: climb from the trig seeds
    jm, jc = _half_seeds(x)
    if twice == 1:
        return jm
    mu = 1.5
    for _ in range((twice - 3) // 2):
        jm, jc = jc, (2.0 * mu / x) * jc - jm
        mu += 1.0
    return jc


def _miller_scalar_once(twice: int, x: float, start: int) -> float:
    """One downward Miller pass; start is the top integer part of the order."""
    half_lattice = twice % 2 == 1
    # orders visited: start + frac, start-1 + frac, ..., frac
    frac = 0.5 if half_lattice else 0.0
    p_up = 0.0
    p = _TINY
    target = None
    p_half = p_3half = None
    ssum = 0.0  # J_0 + 2*sum_{even mu>=2} J_mu for the integer lattice
    mu = start + frac
    k = start
    target_k = (twice - (1 if half_lattice else 0)) // 2
    while k >= 0:
        if not half_lattice and k % 2 == 0 and k >= 2:
            ssum += 2.0 * p
        if k == target_k:
            target = p
        if half_lattice and k == 1:
            p_3half = p
        if half_lattice and k == 0:
            p_half = p
        if not half_lattice and k == 0:
            ssum += p
        if k == 0:
            break
        p_up, p = p, (2.0 * mu / x) * p - p_up
        mu -= 1.0
        k -= 1
        if abs(p) > _RESCALE:
            scale = 1.0 / abs(p)
            p *= scale
            p_up *= scale
            ssum *= scale
            if target is not None:
                target *= scale
            if p_half is not None:
                p_half *= scale
            if p_3half is not None:
                p_3half *= scale
    if half_lattice:
        jh, j3h = _half_seeds(x)
        if abs(jh) >= abs(j3h):
            return target * (jh / p_half)
        return target * (j3h / p_3half)
    return target / ssum


def _miller_scalar(twice: int, x: float) -> float:
    nu = twice / 2.0
    start = _miller_start(nu, x)
    # near a zero of J_nu the relative test is unattainable; allow an absolute
    # slack far below the local oscillation envelope sqrt(2/(pi x))
    floor = 1e-14 * math.sqrt(2.0 / (math.pi * x))
    a = _miller_scalar_once(twice, x, start)
    for _ in range(5):
        b = _miller_scalar_once(twice, x, start + 40)
        if abs(a - b) <= 1e-13 * max(abs(a), abs(b)) + floor:
            return b
        start += 80
        a = _miller_scalar_once(twice, x, start)
    raise ConvergenceError(f"Miller recurrence failed to settle at nu={nu}, x={x}")


def _j_scalar(twice: int, x: float) -> float:
    nu = twice / 2.0
    if x <= _series_threshold(nu):
        return _series_scalar(nu, x)
    if twice % 2 == 1 and nu <= x:
        return _upward_scalar(twice, x)
    return _miller_scalar(twice, x)


# ---------------------------------------------------------------------------
# vectorized evaluation (used by quadrature and field sampling)
# ---------------------------------------------------------------------------

def _series_array(nu: float, xs: np.ndarray) -> np.ndarray:
    half = 0.5 * xs
    if nu <= 140.0:
        pref = half**nu / math.gamma(nu + 1.0)
    else:
        with np.errstate(divide="ignore"):
            lp = nu * np.log(half) - math.lgamma(nu + 1.0)
        pref = np.where(lp < -745.0, 0.0, np.exp(np.maximum(lp, -745.0)))
    if nu == 0.0:
        pref = np.where(xs == 0.0, 1.0, pref)
    y = half * half
    term = np.ones_like(xs)
    total = np.ones_like(xs)
    for j in range(1, 500):
        term *= -y / (j * (nu + j))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return pref * total


def _upward_array(twice: int, xs: np.ndarray) -> np.ndarray:
    c = np.sqrt(2.0 / (math.pi * xs))
    jm = c * np.sin(xs)
    jc = c * (np.sin(xs) / xs - np.cos(xs))
    if twice == 1:
        return jm
    if twice == 3:
        return jc
    mu = 1.5
    for _ in range((twice - 3) // 2):
        jm, jc = jc, (2.0 * mu / xs) * jc - jm
        mu += 1.0
    return jc


def _miller_array_once(twice: int, xs: np.ndarray, start: int) -> np.ndarray:
    half_lattice = twice % 2 == 1
    frac = 0.5 if half_lattice else 0.0
    n = xs.shape[0]
    p_up = np.zeros(n)
    p = np.full(n, _TINY)
    target = np.zeros(n)
    p_half = np.zeros(n)
    p_3half = np.zeros(n)
    ssum = np.zeros(n)
    k = start
    mu = start + frac
    target_k = (twice - (1 if half_lattice else 0)) // 2
    while k >= 0:
        if not half_lattice and k % 2 == 0 and k >= 2:
            ssum += 2.0 * p
        if k == target_k:
            target[:] = p
        if half_lattice and k == 1:
            p_3half[:] = p
        if half_lattice and k == 0:
            p_half[:] = p
        if not half_lattice and k == 0:
            ssum += p
        if k == 0:
            break
        p_up, p = p, (2.0 * mu / xs) * p - p_up
        mu -= 1.0
        k -= 1
        big = np.abs(p) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1.0 / np.abs(p), 1.0)
            for arr in (p, p_up, ssum, target, p_half, p_3half):
                arr *= scale
    if half_lattice:
        c = np.sqrt(2.0 / (math.pi * xs))
        jh = c * np.sin(xs)
        j3h = c * (np.sin(xs) / xs - np.cos(xs))
        use_h = np.abs(jh) >= np.abs(j3h)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(use_h, target * (jh / p_half), target * (j3h / p_3half))
        return out
    return target / ssum


def _miller_array(twice: int, xs: np.ndarray) -> np.ndarray:
    nu = twice / 2.0
    start = _miller_start(nu, float(np.max(xs)))
    floor = 1e-14 * np.sqrt(2.0 / (math.pi * xs))
    a = _miller_array_once(twice, xs, start)
    for _ in range(5):
        b = _miller_array_once(twice, xs, start + 40)
        ok = np.abs(a - b) <= 1e-13 * np.maximum(np.abs(a), np.abs(b)) + floor
        if np.all(ok):
            return b
        start += 80
        a = _miller_array_once(twice, xs, start)
    raise ConvergenceError(f"Miller recurrence failed to settle at nu={nu} (array)")


def bessel_j_array(order, xs) -> np.ndarray:
    """Vectorized J_nu over a nonnegative array of arguments."""
    o = _as_order(order)
    nu = o.nu
    _check_order_range(nu)
    xs = np.asarray(xs, dtype=float)
    flat = xs.ravel()
    if flat.size and (np.any(flat < 0) or not np.all(np.isfinite(flat))):
        raise ValueError("arguments must be finite and >= 0")
    out = np.empty_like(flat)
    thr = _series_threshold(nu)
    m_series = flat <= thr
    if np.any(m_series):
        out[m_series] = _series_array(nu, flat[m_series])
    rest = ~m_series
    if np.any(rest):
        if o.twice_order % 2 == 1:
            m_up = rest & (flat >= nu)
            if np.any(m_up):
                out[m_up] = _upward_array(o.twice_order, flat[m_up])
            m_mil = rest & ~m_up
        else:
            m_mil = rest
        if np.any(m_mil):
            out[m_mil] = _miller_array(o.twice_order, flat[m_mil])
    return out.reshape(xs.shape)


# ---------------------------------------------------------------------------
# public scalar operations
# ---------------------------------------------------------------------------

def bessel_j(order, x: float) -> float:
    """J_nu(x) for nu on the half-integer lattice, x >= 0."""
    o = _as_order(order)
    _check_order_range(o.nu)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("argument must be finite")
    if x < 0.0:
        raise ValueError("argument must be >= 0")
    return _j_scalar(o.twice_order, x)


def bessel_j_prime(order, x: float) -> float:
    """J'_nu(x) via J'_nu = (nu/x) J_nu - J_{nu+1}."""
    o = _as_order(order)
    _check_order_range(o.nu)
    x = float(x)
    if x == 0.0:
        if o.twice_order == 0:
            return 0.0  # J'_0 = -J_1, vanishing at the origin
        raise ValueError("composite form (nu/x) J_nu - J_{nu+1} is singular at x = 0")
    if x < 0.0 or not math.isfinite(x):
        raise ValueError("argument must be finite and > 0")
    return (o.nu / x) * _j_scalar(o.twice_order, x) - _j_scalar(o.twice_order + 2, x)


def bessel_ratio_cf(order, x: float, tol: float = 1e-14, max_depth: int = 10000) -> float:
    """J_{nu+1}(x)/J_nu(x) by the continued fraction

        1 / (2(nu+1)/x - 1 / (2(nu+2)/x - ...))

    evaluated with the modified Lentz scheme; stops when two successive
    convergents agree to ``tol`` relative.  Requires 2(nu+1)/x > 1.
    """
    o = _as_order(order)
    nu = o.nu
    x = float(x)
    if x <= 0.0:
        raise ValueError("argument must be > 0")
    if 2.0 * (nu + 1.0) / x <= 1.0:
        raise ValueError("ratio continued fraction requires 2(nu+1)/x > 1")
    f = _TINY
    c = f
    d = 0.0
    for j in range(1, max_depth + 1):
        a = 1.0 if j == 1 else -1.0
        b = 2.0 * (nu + j) / x
        d = b + a * d
        if d == 0.0:
            d = _TINY
        c = b + a / c
        if c == 0.0:
            c = _TINY
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            return f
    raise ConvergenceError(f"continued fraction did not settle within {max_depth} terms")


def zero_bracket(order) -> ZeroBracket:
    """Enclosure of j_nu: nu <= j_nu <= sqrt(nu+1)(sqrt(nu+2)+1)."""
    o = _as_order(order)
    nu = o.nu
    return ZeroBracket(nu, math.sqrt(nu + 1.0) * (math.sqrt(nu + 2.0) + 1.0))


@lru_cache(maxsize=None)
def _first_zero_cached(twice: int) -> float:
    o = HalfIntOrder(twice)
    nu = o.nu
    br = zero_bracket(o)
    lo, hi = br.lower, br.upper
    f_lo = _j_scalar(twice, lo)
    f_hi = _j_scalar(twice, hi)
    if not (f_lo > 0.0 > f_hi):
        raise BracketError(f"no sign change for j_nu in [{lo}, {hi}] at nu={nu}")
    # bisection down to a short interval, then Newton polished in-bracket
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        fm = _j_scalar(twice, mid)
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-2:
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        fx = _j_scalar(twice, x)
        if fx > 0.0:
            lo = max(lo, x)
        elif fx < 0.0:
            hi = min(hi, x)
        else:
            return x
        fp = (nu / x) * fx - _j_scalar(twice + 2, x)
        step = fx / fp if fp != 0.0 else hi - lo
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)  # Newton overshot the bracket
        if abs(x_new - x) <= 1e-13 * x:
            return x_new
        x = x_new
    return x


def first_zero(order) -> float:
    """First positive zero j_nu, absolute accuracy well below 1e-10."""
    o = _as_order(order)
    _check_order_range(o.nu)
    return _first_zero_cached(o.twice_order)


@lru_cache(maxsize=8)
def _gl_nodes(n: int):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


@lru_cache(maxsize=None)
def _radial_norm_cached(twice: int) -> float:
    z = _first_zero_cached(twice)
    o = HalfIntOrder(twice)
    nodes, weights = _gl_nodes(16)
    panels = 8
    prev = None
    while panels <= 4096:
        edges = np.linspace(0.0, z, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1] - edges[0])
        xs = (mid[:, None] + half * nodes[None, :]).ravel()
        ws = np.broadcast_to(half * weights[None, :], (panels, weights.size)).ravel()
        j = bessel_j_array(o, xs)
        val = float(np.sum(ws * xs * j * j))
        if prev is not None and abs(val - prev) <= 1e-12 * abs(val):
            return val
        prev = val
        panels *= 2
    raise ConvergenceError("radial norm quadrature did not converge")


def radial_norm_integral(order) -> float:
    """int_0^{j_nu} r J_nu(r)^2 dr by panel-doubling Gauss-Legendre."""
    o = _as_order(order)
    _check_order_range(o.nu)
    return _radial_norm_cached(o.twice_order)


def bessel_j_half_closed(order, x: float) -> float:
    """Closed trigonometric J_nu for half-odd nu up to 9/2 (cross-check path)."""
    o = _as_order(order)
    if o.is_integer or o.twice_order > 9:
        raise ValueError("closed forms only for half-odd orders up to 9/2")
    x = float(x)
    if x <= 0.0:
        raise ValueError("argument must be > 0")
    c = math.sqrt(2.0 / (math.pi * x))
    s, co = math.sin(x), math.cos(x)
    t = o.twice_order
    if t == 1:
        return c * s
    if t == 3:
        return c * (s / x - co)
    if t == 5:
        return c * ((3.0 / x**2 - 1.0) * s - 3.0 * co / x)
    if t == 7:
        return c * ((15.0 / x**3 - 6.0 / x) * s - (15.0 / x**2 - 1.0) * co)
    return c * ((105.0 / x**4 - 45.0 / x**2 + 1.0) * s - (105.0 / x**3 - 10.0 / x) * co)
