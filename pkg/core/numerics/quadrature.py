"""
Gauss-Legendre Quadrature
=========================

Rules on [-1, 1] and the maps that carry them onto the half-lines and
finite intervals used by the kernel (z-integrals), the Nyström blocks
(x-integrals on (xi_j, xi_j + cutoff)) and the determinant
representation (eta-integral).

Usage:
    rule = gauss_legendre(40)
    ray = HalfLineMap(left=0.0, scale=1.0, kind=HalfLineMap.ALGEBRAIC)
    integrate_halfline(np.exp, ray, rule)
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from core.numerics.exceptions import AiryRangeError, QuadratureError

logger = logging.getLogger(__name__)


MAX_ORDER = 512
NEWTON_TOLERANCE = 1e-15
NEWTON_MAX_ITERATIONS = 100


@dataclass(frozen=True)
class QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1]"""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


def _legendre(n, x):
    """P_n(x) and P_{n-1}(x) by the three-term recurrence"""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    return p, p_prev


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """
    Gauss-Legendre nodes and weights by Newton iteration

    Args:
        n: number of nodes, 1 <= n <= 512

    Returns:
        QuadratureRule with increasing nodes, symmetric about 0

    Raises:
        AiryRangeError: n out of range
    """
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= MAX_ORDER:
        raise AiryRangeError(f"Gauss-Legendre order must be in 1..{MAX_ORDER}, got {n}")
    n = int(n)

    # Largest roots first; the rest follow by symmetry
    half = (n + 1) // 2
    k = np.arange(half)
    x = np.cos(np.pi * (k + 0.75) / (n + 0.5))
    for _ in range(NEWTON_MAX_ITERATIONS):
        p, p_prev = _legendre(n, x)
        slope = n * (x * p - p_prev) / (x * x - 1.0)
        step = p / slope
        x = x - step
        if np.max(np.abs(step)) < NEWTON_TOLERANCE:
            break

    p, p_prev = _legendre(n, x)
    slope = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * slope * slope)

    if n % 2:
        x[-1] = 0.0

    nodes = np.concatenate([-x, x[: n // 2][::-1]])
    weights = np.concatenate([w, w[: n // 2][::-1]])

    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(order=n, nodes=nodes, weights=weights)


@dataclass(frozen=True)
class HalfLineMap:
    """
    Monotone map from (-1, 1) onto a half-line

    kind:
        truncated-affine: onto (left, left + scale) for direction +1,
                          (left - scale, left) for direction -1
        algebraic:        t -> left + direction * scale * (1 + t) / (1 - t),
                          onto (left, inf) or (-inf, left)
    """

    TRUNCATED_AFFINE = 'truncated-affine'
    ALGEBRAIC = 'algebraic'

    left: float
    scale: float
    kind: str = TRUNCATED_AFFINE
    direction: int = 1

    def __post_init__(self):
        if not self.scale > 0:
            raise AiryRangeError(f"HalfLineMap scale must be positive, got {self.scale}")
        if self.kind not in (self.TRUNCATED_AFFINE, self.ALGEBRAIC):
            raise AiryRangeError(f"Unknown HalfLineMap kind: {self.kind}")
        if self.direction not in (1, -1):
            raise AiryRangeError(f"HalfLineMap direction must be +1 or -1, got {self.direction}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == self.TRUNCATED_AFFINE:
            return self.left + self.direction * self.scale * (t + 1.0) / 2.0
        return self.left + self.direction * self.scale * (1.0 + t) / (1.0 - t)

    def jacobian(self, t):
        """|d phi / dt|"""
        t = np.asarray(t, dtype=float)
        if self.kind == self.TRUNCATED_AFFINE:
            return np.full_like(t, self.scale / 2.0)
        return 2.0 * self.scale / (1.0 - t) ** 2

    def points(self, rule):
        """Mapped nodes and Jacobian-weighted weights"""
        return self(rule.nodes), rule.weights * self.jacobian(rule.nodes)


def interval_points(a, b, rule):
    """Nodes and weights of rule carried onto (a, b)"""
    half = (b - a) / 2.0
    return a + half * (rule.nodes + 1.0), half * rule.weights


def _evaluate(f, z):
    values = np.asarray(f(z), dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        node = float(np.atleast_1d(z)[np.argmax(bad)])
        raise QuadratureError(f"Integrand is not finite at z = {node}", node=node)
    return values


def integrate_halfline(f, ray, rule):
    """
    sum_k w_k f(phi(t_k)) phi'(t_k)

    Args:
        f: vectorised integrand
        ray: HalfLineMap
        rule: QuadratureRule

    Raises:
        QuadratureError: f not finite at some node (carries the node)
    """
    z, w = ray.points(rule)
    return float(np.dot(w, _evaluate(f, z)))


def integrate_with_error(f, ray, order):
    """
    Integral with the embedded-doubling error estimate

    Returns:
        tuple: (I_2n, |I_2n - I_n|)
    """
    coarse = integrate_halfline(f, ray, gauss_legendre(order))
    fine = integrate_halfline(f, ray, gauss_legendre(min(2 * order, MAX_ORDER)))
    error = abs(fine - coarse)
    logger.debug(f"Half-line integral over {ray.kind} map, n={order}: {fine} (+/- {error:.2e})")
    return fine, error
