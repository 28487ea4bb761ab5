"""Boundary-law recursion, its scalar reduction and positive-root isolation.

A translation-invariant boundary law ``z`` (length q-1) is a fixed point of

    z_i = (((theta-1) z_i + S + 1) / (theta + S)) ** k,   S = sum_j z_j.

Every solution takes only the values 1 and some ``z* = x**k`` where ``x``
is 1 or a positive root of

    phi_m(x) = m x^k - (theta-1)(x^{k-1} + ... + x) + q - m

for ``m`` the number of coordinates carrying ``z*``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from .model import BOUNDARY_RTOL, BoundaryLaw, PottsParams, compare_theta, theta_critical, \
    theta_critical_exact

log = logging.getLogger(__name__)

__all__ = [
    "RootSet",
    "recursion_map",
    "vector_residual",
    "scalar_map_fm",
    "phi",
    "phi_prime",
    "phi_root_bounds",
    "solve_phi",
    "solve_quadratic_k2",
    "psi_at_thetac",
    "geometric_grid",
    "refine_root",
    "bracket_sign_changes",
]

GRID_LO = 1e-8
GRID_HI = 1e8
BISECT_RTOL = 1e-14
TRIVIAL_ATOL = 1e-9


@dataclass(frozen=True)
class RootSet:
    """Positive roots of ``phi_m`` with multiplicities, ascending.

    ``bound`` is the interval scanned for roots; it always contains the
    Cauchy bounds of the polynomial, so no positive root lies outside it.
    """

    roots: Tuple[Tuple[float, int], ...] = ()
    bound: Tuple[float, float] = (GRID_LO, GRID_HI)

    def __post_init__(self):
        if sum(mult for _, mult in self.roots) > 2:
            raise ValueError(f"more than two positive roots: {self.roots}")

    @property
    def values(self) -> List[float]:
        return [x for x, _ in self.roots]

    @property
    def multiplicities(self) -> List[int]:
        return [mult for _, mult in self.roots]

    @property
    def total_multiplicity(self) -> int:
        return sum(self.multiplicities)

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)


# ---------------------------------------------------------------------------
# vector recursion
# ---------------------------------------------------------------------------

def _field_map(h: np.ndarray, theta: float) -> np.ndarray:
    """``F(h)`` for an array of field vectors (last axis has length q-1)."""
    z = np.exp(h)
    s = z.sum(axis=-1, keepdims=True)
    return np.log(((theta - 1.0) * z + s + 1.0) / (theta + s))


def recursion_map(h, params: PottsParams) -> BoundaryLaw:
    """Apply the one-successor map ``F(h, theta)``.

    ``h`` may be a ``BoundaryLaw`` (fields taken as ``ln z``) or a plain
    sequence of fields. The returned law holds ``exp(F(h))``.
    """
    if isinstance(h, BoundaryLaw):
        fields = h.h
    else:
        fields = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(fields)):
        raise ValueError(f"fields must be finite: {fields}")
    if fields.shape != (params.q - 1,):
        raise ValueError(f"expected {params.q - 1} fields, got shape {fields.shape}")
    return BoundaryLaw.from_h(_field_map(fields, params.theta))


def _rhs(z: np.ndarray, theta: float, k: int) -> np.ndarray:
    s = z.sum(axis=-1, keepdims=True)
    return (((theta - 1.0) * z + s + 1.0) / (theta + s)) ** k


def vector_residual(z, params: PottsParams) -> float:
    """Max-norm residual of the fixed-point system in ``z`` coordinates."""
    z = np.asarray(z.z if isinstance(z, BoundaryLaw) else z, dtype=float)
    if z.shape != (params.q - 1,):
        raise ValueError(f"expected {params.q - 1} components, got shape {z.shape}")
    if np.any(z <= 0):
        raise ValueError("boundary law components must be positive")
    return float(np.max(np.abs(z - _rhs(z, params.theta, params.k))))


# ---------------------------------------------------------------------------
# scalar reduction
# ---------------------------------------------------------------------------

def _check_m(m: int, q: int):
    if not 1 <= m <= q - 1:
        raise ValueError(f"m must lie in 1..{q - 1}, got {m}")


def scalar_map_fm(z, m: int, params: PottsParams):
    """``f_m(z) = (((theta+m-1) z + q-m) / (m z + q-m-1+theta)) ** k``."""
    _check_m(m, params.q)
    q, th = params.q, params.theta
    z = np.asarray(z, dtype=float)
    out = (((th + m - 1) * z + q - m) / (m * z + q - m - 1 + th)) ** params.k
    return float(out) if out.ndim == 0 else out


def _phi_coeffs(m: int, q: int, k: int, theta: float) -> np.ndarray:
    # highest degree first, for np.polyval
    return np.array([m] + [-(theta - 1.0)] * (k - 1) + [q - m], dtype=float)


def phi(x, m: int, params: PottsParams):
    """Reduced scalar polynomial; its positive roots are the non-trivial
    fixed points of ``f_m`` in the ``x = z**(1/k)`` scale."""
    _check_m(m, params.q)
    val = np.polyval(_phi_coeffs(m, params.q, params.k, params.theta), np.asarray(x, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def phi_prime(x, m: int, params: PottsParams):
    _check_m(m, params.q)
    val = np.polyval(np.polyder(_phi_coeffs(m, params.q, params.k, params.theta)),
                     np.asarray(x, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def _power_sum(x: float, k: int) -> float:
    """``x + x^2 + ... + x^{k-1}``."""
    return sum(x ** i for i in range(1, k))


def phi_root_bounds(m: int, params: PottsParams) -> Tuple[float, float]:
    """Cauchy lower/upper bounds on the positive roots of ``phi_m``."""
    _check_m(m, params.q)
    q, th = params.q, params.theta
    upper = 1.0 + max(th - 1.0, q - m) / m
    lower = 1.0 / (1.0 + max(th - 1.0, m) / (q - m))
    return lower, upper


def psi_at_thetac(x, m: int, params: PottsParams):
    """``phi_m(x, theta_c) / (x - 1)`` as an explicit polynomial."""
    _check_m(m, params.q)
    q, k = params.q, params.k
    x = np.asarray(x, dtype=float)
    first = m * sum(x ** i for i in range(k))
    second = (q / (k - 1)) * sum((k - i - 1) * x ** i for i in range(k - 1))
    out = first - second
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# root engine (shared with the critical-point solver)
# ---------------------------------------------------------------------------

def geometric_grid(lo: float = GRID_LO, hi: float = GRID_HI, dense: int = 400,
                   sparse: int = 50) -> np.ndarray:
    """Log-spaced grid, ``dense`` points per decade on [0.1, 10] and
    ``sparse`` elsewhere."""
    edges = sorted({lo, hi, *[e for e in (0.1, 10.0) if lo < e < hi]})
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        per_decade = dense if (a >= 0.1 and b <= 10.0) else sparse
        n = max(2, int(math.ceil(per_decade * math.log10(b / a))) + 1)
        pieces.append(np.geomspace(a, b, n))
    return np.unique(np.concatenate(pieces))


def bracket_sign_changes(f: Callable, grid: np.ndarray) -> List[Tuple[float, float]]:
    """Adjacent grid cells where ``f`` changes sign (or hits zero exactly)."""
    vals = np.asarray(f(grid), dtype=float)
    brackets = []
    i = 0
    while i < len(grid) - 1:
        if vals[i] == 0.0:
            brackets.append((grid[i], grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            brackets.append((grid[i], grid[i + 1]))
        i += 1
    if vals[-1] == 0.0:
        brackets.append((grid[-1], grid[-1]))
    return brackets


def refine_root(f: Callable, df: Callable, a: float, b: float,
                rtol: float = BISECT_RTOL, newton_steps: int = 4) -> float:
    """Bisect a sign-change bracket to relative width ``rtol``, then polish
    with Newton steps that are kept only while they stay in the bracket
    and do not increase ``|f|``."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise ValueError(f"no sign change on [{a}, {b}]")
    while b - a > rtol * max(abs(a), abs(b)):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    x = a if abs(fa) <= abs(fb) else b
    fx = f(x)
    for _ in range(newton_steps):
        d = df(x)
        if d == 0.0 or not math.isfinite(d):
            break
        x_new = x - fx / d
        f_new = f(x_new)
        if not (a <= x_new <= b) or abs(f_new) >= abs(fx):
            break
        x, fx = x_new, f_new
    return x


# ---------------------------------------------------------------------------
# phi roots
# ---------------------------------------------------------------------------

def _near_thetac(params: PottsParams, rtol: float) -> bool:
    return compare_theta(params, theta_critical(params.q, params.k),
                         theta_critical_exact(params.q, params.k), rtol=rtol) == 0


def solve_phi(m: int, params: PottsParams, rtol: float = BOUNDARY_RTOL) -> RootSet:
    """All positive roots of ``phi_m(., theta)`` with multiplicity.

    ``phi_m`` is positive at 0 and at infinity and its derivative has a
    single positive zero, so it is unimodal on ``(0, inf)``: the sign of
    its minimum decides between no root, one tangential (double) root and
    two simple roots. The minimum is compared against
    ``rtol * theta * (x + ... + x^{k-1})``, which to first order is the
    same as comparing ``theta`` with the tangency value at relative
    tolerance ``rtol``.
    """
    _check_m(m, params.q)
    q, k, th = params.q, params.k, params.theta
    lower, upper = phi_root_bounds(m, params)
    lo, hi = min(GRID_LO, 0.5 * lower), max(GRID_HI, 2.0 * upper)
    grid = geometric_grid(lo, hi)

    f = lambda x: phi(x, m, params)
    df = lambda x: phi_prime(x, m, params)
    d2 = np.polyder(_phi_coeffs(m, q, k, th), 2)
    ddf = lambda x: float(np.polyval(d2, x))

    crit = bracket_sign_changes(df, grid)
    if len(crit) != 1:
        raise RuntimeError(f"phi_{m}' has {len(crit)} positive sign changes; expected 1")
    x_min = refine_root(df, ddf, *crit[0])
    v_min = f(x_min)
    tangency_tol = rtol * th * _power_sum(x_min, k)
    at_thetac = _near_thetac(params, rtol)

    def snap(x):
        if at_thetac and abs(x - 1.0) <= TRIVIAL_ATOL:
            return 1.0
        return float(x)

    if abs(v_min) <= tangency_tol:
        roots = ((snap(x_min), 2),)
    elif v_min > 0:
        roots = ()
    else:
        x1 = refine_root(f, df, lo, x_min)
        x2 = refine_root(f, df, x_min, hi)
        roots = ((snap(x1), 1), (snap(x2), 1))
    out = RootSet(roots, (lo, hi))
    log.debug("phi_%d roots (q=%d k=%d theta=%r): %s; Cauchy bounds [%g, %g]",
              m, q, k, th, out.roots, lower, upper)
    return out


def solve_quadratic_k2(m: int, q: int, theta: float, rtol: float = BOUNDARY_RTOL) -> RootSet:
    """Closed-form roots of ``m x^2 - (theta-1) x + q - m`` (the k = 2 case).

    The discriminant is treated as zero when ``|D| <= 2 rtol theta (theta-1)``,
    the same tangency criterion ``solve_phi`` uses.
    """
    _check_m(m, q)
    b = theta - 1.0
    disc = b * b - 4.0 * m * (q - m)
    if abs(disc) <= 2.0 * rtol * theta * b:
        return RootSet((((b / (2.0 * m)), 2),))
    if disc < 0:
        return RootSet(())
    big = (b + math.sqrt(disc)) / (2.0 * m)
    small = (q - m) / (m * big)
    return RootSet(((small, 1), (big, 1)))
