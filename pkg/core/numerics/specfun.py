"""
Airy Functions
==============

Ai, Ai', Bi, Bi' on the real line to near machine precision.

Three evaluation branches:
- Maclaurin series about 0 for |x| <= X_SWITCH
- asymptotic expansions for |x| >= X_ASYM (exponential form for x > 0,
  phase form for x < 0); at X_ASYM the optimally truncated series is
  already exact in double precision
- Taylor continuation in between, about anchors spaced ANCHOR_STEP apart

Anchor values are propagated through the Airy equation y'' = x y. Ai is
carried leftward from the asymptotic region (it grows in that direction,
so errors stay relative), Bi rightward from the Maclaurin data, and both
from 0 into the oscillatory region.

Usage:
    from core.numerics.specfun import airy_ai, airy_all
    airy_ai(0.0)                      # 0.3550280538878172
    ai, aip, bi, bip = airy_all(xs)   # numpy arrays
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from django.conf import settings

from core.numerics.exceptions import AiryDomainError, AiryRangeError

logger = logging.getLogger(__name__)


# =============================================================================
# CONSTANTS
# =============================================================================

AI0 = 0.35502805388781723926     # Ai(0) = 3^(-2/3) / Gamma(2/3)
AIP0 = -0.25881940379280679840   # Ai'(0) = -3^(-1/3) / Gamma(1/3)
BI0 = 0.61492662744600073515     # Bi(0) = 3^(-1/6) / Gamma(2/3)
BIP0 = 0.44828835735382635791    # Bi'(0) = 3^(1/6) / Gamma(1/3)

X_SWITCH = 1.0
X_ASYM = 9.0
ANCHOR_STEP = 0.5

MACLAURIN_TERMS = 40
TAYLOR_TERMS = 30
PROPAGATION_TERMS = 48
ASYMPTOTIC_TERMS = 80

SQRT_PI = math.sqrt(math.pi)

# pi/4 split in two parts for the phase reduction
PI4_HI = 0.78539816339744827900
PI4_LO = 3.0616169978683830179e-17

DEFAULT_BI_CAP = 15.0


@dataclass(frozen=True)
class AiryEval:
    """Ai, Ai', Bi, Bi' at one point"""

    x: float
    ai: float
    ai_prime: float
    bi: float
    bi_prime: float

    @property
    def wronskian(self):
        """Ai Bi' - Ai' Bi, equal to 1/pi"""
        return self.ai * self.bi_prime - self.ai_prime * self.bi


# =============================================================================
# SERIES MACHINERY
# =============================================================================

def _taylor_coefficients(x0, y0, dy0, terms):
    """
    Taylor coefficients of a solution of y'' = x y about x0

    Args:
        x0, y0, dy0: arrays of expansion points, values and slopes
        terms: number of coefficients

    Returns:
        ndarray of shape (len(x0), terms)

    (k+2)(k+1) a_{k+2} = x0 a_k + a_{k-1}
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    coeffs = np.zeros((x0.size, terms))
    coeffs[:, 0] = y0
    coeffs[:, 1] = dy0
    coeffs[:, 2] = x0 * coeffs[:, 0] / 2.0
    for k in range(1, terms - 2):
        coeffs[:, k + 2] = (x0 * coeffs[:, k] + coeffs[:, k - 1]) / ((k + 2) * (k + 1))
    return coeffs


def _horner(coeffs, h):
    """Value and derivative of sum_k c_k h^k, row-wise"""
    terms = coeffs.shape[1]
    value = coeffs[:, terms - 1].copy()
    slope = (terms - 1) * coeffs[:, terms - 1]
    for k in range(terms - 2, -1, -1):
        value = value * h + coeffs[:, k]
        if k > 0:
            slope = slope * h + k * coeffs[:, k]
    return value, slope


@lru_cache(maxsize=1)
def _asymptotic_constants():
    """u_k and v_k of the Airy asymptotic expansions"""
    u = np.empty(ASYMPTOTIC_TERMS)
    v = np.empty(ASYMPTOTIC_TERMS)
    u[0] = 1.0
    v[0] = 1.0
    for k in range(1, ASYMPTOTIC_TERMS):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v[k] = -u[k] * (6 * k + 1) / (6 * k - 1)
    return u, v


def _asymptotic_sums(zeta):
    """
    Optimally truncated sums of u_k / zeta^k and v_k / zeta^k

    Returns the alternating sums, the plain sums and the even/odd parts
    with sign (-1)^(k//2) used by the oscillatory form. Each element stops
    at its own smallest term.
    """
    u, v = _asymptotic_constants()
    inv = 1.0 / zeta
    power = np.ones_like(zeta)
    live = np.ones(zeta.shape, dtype=bool)
    previous = np.full(zeta.shape, np.inf)

    u_alt = np.zeros_like(zeta)
    v_alt = np.zeros_like(zeta)
    u_plain = np.zeros_like(zeta)
    v_plain = np.zeros_like(zeta)
    u_even = np.zeros_like(zeta)
    u_odd = np.zeros_like(zeta)
    v_even = np.zeros_like(zeta)
    v_odd = np.zeros_like(zeta)

    for k in range(ASYMPTOTIC_TERMS):
        size = np.abs(u[k] * power)
        live &= size <= previous
        if not live.any():
            break
        tu = np.where(live, u[k] * power, 0.0)
        tv = np.where(live, v[k] * power, 0.0)
        alt = -1.0 if k % 2 else 1.0
        u_alt += alt * tu
        v_alt += alt * tv
        u_plain += tu
        v_plain += tv
        phase_sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            u_odd += phase_sign * tu
            v_odd += phase_sign * tv
        else:
            u_even += phase_sign * tu
            v_even += phase_sign * tv
        live &= size > 1e-18 * np.abs(u_plain)
        previous = size
        power = power * inv

    return {
        'u_alt': u_alt, 'v_alt': v_alt,
        'u': u_plain, 'v': v_plain,
        'u_even': u_even, 'u_odd': u_odd,
        'v_even': v_even, 'v_odd': v_odd,
    }


# =============================================================================
# BRANCHES
# =============================================================================

def _maclaurin(x):
    """Series about 0; accurate for |x| <= X_SWITCH"""
    x = np.asarray(x, dtype=float)
    c_ai = _taylor_coefficients([0.0], AI0, AIP0, MACLAURIN_TERMS)
    c_bi = _taylor_coefficients([0.0], BI0, BIP0, MACLAURIN_TERMS)
    ai, aip = _horner(np.broadcast_to(c_ai, (x.size, MACLAURIN_TERMS)), x)
    bi, bip = _horner(np.broadcast_to(c_bi, (x.size, MACLAURIN_TERMS)), x)
    return ai, aip, bi, bip


def _asymptotic_positive(x, want_bi=True):
    """Exponential form, x >= X_ASYM"""
    x = np.asarray(x, dtype=float)
    zeta = (2.0 / 3.0) * x * np.sqrt(x)
    sums = _asymptotic_sums(zeta)
    quarter = np.sqrt(np.sqrt(x))
    with np.errstate(under='ignore'):
        decay = np.exp(-zeta)
    ai = decay / (2.0 * SQRT_PI * quarter) * sums['u_alt']
    aip = -quarter * decay / (2.0 * SQRT_PI) * sums['v_alt']
    if not want_bi:
        return ai, aip, None, None
    with np.errstate(over='ignore'):
        growth = np.exp(zeta)
    bi = growth / (SQRT_PI * quarter) * sums['u']
    bip = quarter * growth / SQRT_PI * sums['v']
    return ai, aip, bi, bip


def _asymptotic_negative(x, want_bi=True):
    """Phase form, x <= -X_ASYM"""
    t = -np.asarray(x, dtype=float)
    zeta = (2.0 / 3.0) * t * np.sqrt(t)
    theta = (zeta - PI4_HI) - PI4_LO
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    sums = _asymptotic_sums(zeta)
    quarter = np.sqrt(np.sqrt(t))
    ai = (cos_t * sums['u_even'] + sin_t * sums['u_odd']) / (SQRT_PI * quarter)
    aip = quarter * (sin_t * sums['v_even'] - cos_t * sums['v_odd']) / SQRT_PI
    if not want_bi:
        return ai, aip, None, None
    bi = (-sin_t * sums['u_even'] + cos_t * sums['u_odd']) / (SQRT_PI * quarter)
    bip = quarter * (cos_t * sums['v_even'] + sin_t * sums['v_odd']) / SQRT_PI
    return ai, aip, bi, bip


def _propagate(x_start, y, dy, step, count):
    """Carry (y, y') along x_start + k*step, k = 1..count"""
    values = [(y, dy)]
    x0 = x_start
    for _ in range(count):
        coeffs = _taylor_coefficients([x0], y, dy, PROPAGATION_TERMS)
        y_next, dy_next = _horner(coeffs, np.array([step]))
        y, dy = float(y_next[0]), float(dy_next[0])
        x0 += step
        values.append((y, dy))
    return values


@lru_cache(maxsize=1)
def _anchor_table():
    """
    Anchor grid on [-X_ASYM, X_ASYM] with Taylor coefficient tables

    Returns:
        dict with 'grid' and coefficient arrays 'ai', 'bi'
    """
    half = int(round(X_ASYM / ANCHOR_STEP))
    grid = np.arange(-half, half + 1) * ANCHOR_STEP
    centre = half
    size = grid.size

    ai = np.empty(size)
    aip = np.empty(size)
    bi = np.empty(size)
    bip = np.empty(size)

    # Ai: leftward from the asymptotic region down to 0
    start_ai, start_aip, _, _ = _asymptotic_positive(np.array([X_ASYM]), want_bi=False)
    right = _propagate(X_ASYM, float(start_ai[0]), float(start_aip[0]), -ANCHOR_STEP, half)
    for k, (y, dy) in enumerate(right):
        ai[size - 1 - k] = y
        aip[size - 1 - k] = dy

    # Ai and Bi from the exact values at 0 into the oscillatory region
    for (y0, dy0, out, dout) in ((AI0, AIP0, ai, aip), (BI0, BIP0, bi, bip)):
        left = _propagate(0.0, y0, dy0, -ANCHOR_STEP, half)
        for k, (y, dy) in enumerate(left):
            out[centre - k] = y
            dout[centre - k] = dy

    # Bi: rightward from 0
    for k, (y, dy) in enumerate(_propagate(0.0, BI0, BIP0, ANCHOR_STEP, half)):
        bi[centre + k] = y
        bip[centre + k] = dy

    logger.debug(f"Airy anchor table built: {size} anchors on [{grid[0]}, {grid[-1]}]")

    return {
        'grid': grid,
        'ai': _taylor_coefficients(grid, ai, aip, TAYLOR_TERMS),
        'bi': _taylor_coefficients(grid, bi, bip, TAYLOR_TERMS),
    }


def _continued(x, want_bi=True):
    """Taylor continuation about the nearest anchor, |x| < X_ASYM"""
    x = np.asarray(x, dtype=float)
    table = _anchor_table()
    grid = table['grid']
    index = np.rint((x - grid[0]) / ANCHOR_STEP).astype(int)
    index = np.clip(index, 0, grid.size - 1)
    h = x - grid[index]
    ai, aip = _horner(table['ai'][index], h)
    if not want_bi:
        return ai, aip, None, None
    bi, bip = _horner(table['bi'][index], h)
    return ai, aip, bi, bip


def _evaluate(x, want_bi=True):
    """Dispatch every element of x to its branch"""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    flat = x.ravel()
    if not np.all(np.isfinite(flat)):
        raise AiryDomainError("Airy functions need finite arguments")

    ai = np.empty_like(flat)
    aip = np.empty_like(flat)
    bi = np.empty_like(flat) if want_bi else None
    bip = np.empty_like(flat) if want_bi else None

    magnitude = np.abs(flat)
    branches = (
        (magnitude <= X_SWITCH, _maclaurin),
        (flat >= X_ASYM, _asymptotic_positive),
        (flat <= -X_ASYM, _asymptotic_negative),
        ((magnitude > X_SWITCH) & (magnitude < X_ASYM), _continued),
    )
    for mask, branch in branches:
        if not mask.any():
            continue
        if branch is _maclaurin:
            values = branch(flat[mask])
        else:
            values = branch(flat[mask], want_bi=want_bi)
        ai[mask] = values[0]
        aip[mask] = values[1]
        if want_bi:
            bi[mask] = values[2]
            bip[mask] = values[3]

    if want_bi:
        return ai.reshape(shape), aip.reshape(shape), bi.reshape(shape), bip.reshape(shape)
    return ai.reshape(shape), aip.reshape(shape)


# =============================================================================
# PUBLIC API
# =============================================================================

def airy_ai_pair(x):
    """Ai and Ai' on an array (no Bi, so no overflow for large x)"""
    return _evaluate(x, want_bi=False)


def airy_all(x):
    """Ai, Ai', Bi, Bi' on an array; Bi overflows to inf past x ~ 100"""
    with np.errstate(over='ignore'):
        return _evaluate(x, want_bi=True)


def _scalar(x):
    if not math.isfinite(x):
        raise AiryDomainError(f"Airy functions need a finite argument, got {x!r}")
    return np.array([float(x)])


def _bi_cap():
    return getattr(settings, 'AIRYPROC_BI_CAP', DEFAULT_BI_CAP)


def airy_ai(x):
    """Ai(x); returns 0.0 once the exponential factor underflows"""
    ai, _ = airy_ai_pair(_scalar(x))
    return float(ai[0])


def airy_ai_prime(x):
    """Ai'(x)"""
    _, aip = airy_ai_pair(_scalar(x))
    return float(aip[0])


def airy_ai_second(x):
    """Ai''(x) = x Ai(x)"""
    return float(x) * airy_ai(x)


def airy_bi(x):
    """
    Bi(x) for x up to the configured cap

    Raises:
        AiryRangeError: x above AIRYPROC_BI_CAP
    """
    values = _scalar(x)
    cap = _bi_cap()
    if x > cap:
        raise AiryRangeError(f"airy_bi limited to x <= {cap}, got {x}")
    return float(airy_all(values)[2][0])


def airy_bi_prime(x):
    """Bi'(x) for x up to the configured cap"""
    values = _scalar(x)
    cap = _bi_cap()
    if x > cap:
        raise AiryRangeError(f"airy_bi_prime limited to x <= {cap}, got {x}")
    return float(airy_all(values)[3][0])


def airy_eval(x):
    """All four functions at x as an AiryEval"""
    values = _scalar(x)
    cap = _bi_cap()
    if x > cap:
        raise AiryRangeError(f"airy_eval limited to x <= {cap}, got {x}")
    ai, aip, bi, bip = airy_all(values)
    return AiryEval(x=float(x), ai=float(ai[0]), ai_prime=float(aip[0]),
                    bi=float(bi[0]), bi_prime=float(bip[0]))
