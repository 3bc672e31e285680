"""
Extended Airy Kernel
====================

Blocks of the extended Airy kernel

    L_ij(x, y) =  int_0^inf  e^{-z (tau_i - tau_j)} Ai(x + z) Ai(y + z) dz   (i >= j)
    L_ij(x, y) = -int_-inf^0 e^{-z (tau_i - tau_j)} Ai(x + z) Ai(y + z) dz   (i <  j)

and of K = L chi, chi_j the indicator of (xi_j, inf).

For i < j the (-inf, 0) integral oscillates and grows like e^{s z} with
s = tau_j - tau_i. When s is small it is evaluated through

    -int_-inf^0 = int_0^inf - int_-inf^inf

where the full-line integral has the closed Gaussian form returned by
heat_kernel(). The complement subtracts two numbers of size
exp(s^3/12 - s (x + y)/2), so it is only used while that exponent stays
below COMPLEMENT_BUDGET; otherwise the integral is truncated at -40/s and
taken with composite panels that follow the oscillation of the Airy product.

Every z-integral is evaluated in matrix form: with A_x[a, k] = Ai(x_a + z_k),
a block is A_x diag(w_k e^{-z_k (tau_i - tau_j)}) A_y^T.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.numerics.exceptions import KernelIndexError, NumericError
from core.numerics.quadrature import gauss_legendre, interval_points
from core.numerics.specfun import airy_ai_pair

logger = logging.getLogger(__name__)


ALPHA_MARGIN = 10.0
SPLIT_GAP = 2.0
COMPLEMENT_BUDGET = 6.0
NEGATIVE_TAIL = 40.0
Z_SPLIT = 10.0

# Negative z-panels: phase of Ai(a)^2 per panel, longest panel, smallest rule
PANEL_PHASE = 4.0 * math.pi
MAX_PANEL = 8.0
MIN_PANEL_ORDER = 24

DEFAULT_Z_ORDER = 160
DEFAULT_Z_MAX = 40.0


# =============================================================================
# VALUE OBJECTS
# =============================================================================

class TimeGrid(BaseModel):
    """Strictly increasing times tau_1 < ... < tau_m"""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    times: Tuple[float, ...] = Field(min_length=1)

    @field_validator('times')
    @classmethod
    def strictly_increasing(cls, times):
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        return times

    @property
    def m(self):
        return len(self.times)

    def shifted(self, offset):
        return TimeGrid(times=tuple(t + offset for t in self.times))


class ThresholdVector(BaseModel):
    """
    Thresholds xi_1..xi_m and the lower integration point alpha

    alpha defaults to min(xi) - 10 and must stay below every threshold.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    thresholds: Tuple[float, ...] = Field(min_length=1)
    alpha: Optional[float] = None

    @model_validator(mode='before')
    @classmethod
    def default_alpha(cls, data):
        if isinstance(data, dict) and data.get('alpha') is None and data.get('thresholds'):
            data = {**data, 'alpha': min(float(v) for v in data['thresholds']) - ALPHA_MARGIN}
        return data

    @model_validator(mode='after')
    def alpha_below_thresholds(self):
        if not self.alpha < min(self.thresholds):
            raise ValueError(f"alpha ({self.alpha}) must lie below every threshold")
        return self

    @property
    def m(self):
        return len(self.thresholds)

    def shifted(self, offset):
        """Every threshold and alpha moved by offset"""
        return ThresholdVector(
            thresholds=tuple(v + offset for v in self.thresholds),
            alpha=self.alpha + offset,
        )


# =============================================================================
# KERNEL SPEC
# =============================================================================

@dataclass(frozen=True)
class KernelSpec:
    """Times, thresholds and z-quadrature parameters of one kernel"""

    tau: TimeGrid
    xi: ThresholdVector
    z_order: int = DEFAULT_Z_ORDER
    z_max: float = DEFAULT_Z_MAX
    split_gap: float = SPLIT_GAP

    def __post_init__(self):
        if self.tau.m != self.xi.m:
            raise ValueError(f"{self.tau.m} times but {self.xi.m} thresholds")

    @classmethod
    def build(cls, tau, xi, alpha=None, z_order=None, z_max=None):
        """
        KernelSpec from plain sequences (or ready value objects)

        z_order and z_max fall back to AIRYPROC_Z_ORDER / AIRYPROC_Z_MAX.
        """
        if not isinstance(tau, TimeGrid):
            tau = TimeGrid(times=tuple(float(t) for t in tau))
        if not isinstance(xi, ThresholdVector):
            xi = ThresholdVector(thresholds=tuple(float(v) for v in xi), alpha=alpha)
        elif alpha is not None:
            xi = ThresholdVector(thresholds=xi.thresholds, alpha=alpha)
        return cls(
            tau=tau,
            xi=xi,
            z_order=z_order or getattr(settings, 'AIRYPROC_Z_ORDER', DEFAULT_Z_ORDER),
            z_max=z_max or getattr(settings, 'AIRYPROC_Z_MAX', DEFAULT_Z_MAX),
        )

    @property
    def m(self):
        return self.tau.m

    @cached_property
    def times(self):
        return np.array(self.tau.times)

    @cached_property
    def thresholds(self):
        return np.array(self.xi.thresholds)

    @property
    def alpha(self):
        return self.xi.alpha

    def with_thresholds(self, thresholds, alpha=None):
        """Same times and quadrature, new thresholds"""
        xi = ThresholdVector(thresholds=tuple(float(v) for v in thresholds), alpha=alpha)
        return replace(self, xi=xi)

    def with_alpha(self, alpha):
        return replace(self, xi=ThresholdVector(thresholds=self.xi.thresholds, alpha=alpha))

    def shifted(self, offset):
        """Every threshold moved by offset"""
        return replace(self, xi=self.xi.shifted(offset))

    @cached_property
    def positive_points(self):
        """z-nodes and weights on (0, z_max), composite at Z_SPLIT"""
        half = max(self.z_order // 2, 1)
        rule = gauss_legendre(half)
        split = min(Z_SPLIT, self.z_max / 2.0)
        z_near, w_near = interval_points(0.0, split, rule)
        z_far, w_far = interval_points(split, self.z_max, rule)
        return np.concatenate([z_near, z_far]), np.concatenate([w_near, w_far])

    def negative_points(self, gap, lowest=0.0):
        """
        z-nodes and weights on (-NEGATIVE_TAIL / gap, 0)

        Composite rule with one panel per PANEL_PHASE of oscillation of
        Ai(lowest + z)^2, lowest being the smallest coordinate the block
        is evaluated at. Panels are never longer than MAX_PANEL.
        """
        rule = gauss_legendre(max(self.z_order // 5, MIN_PANEL_ORDER))
        edges = negative_panel_edges(NEGATIVE_TAIL / gap, lowest)
        pieces = [interval_points(a, b, rule) for a, b in zip(edges[:-1], edges[1:])]
        return np.concatenate([z for z, _ in pieces]), np.concatenate([w for _, w in pieces])

    def check_index(self, index):
        if isinstance(index, bool) or not isinstance(index, (int, np.integer)) or not 1 <= index <= self.m:
            raise KernelIndexError(f"Block index {index!r} outside 1..{self.m}")
        return int(index) - 1


# =============================================================================
# BLOCK EVALUATION
# =============================================================================

def heat_kernel(gap, x, y):
    """int_-inf^inf e^{gap z} Ai(x + z) Ai(y + z) dz for gap > 0"""
    exponent = gap ** 3 / 12.0 - gap * (x + y) / 2.0 - (x - y) ** 2 / (4.0 * gap)
    return np.exp(exponent) / math.sqrt(4.0 * math.pi * gap)


def negative_panel_edges(length, lowest):
    """
    Increasing panel edges on (-length, 0)

    Ai(lowest + z)^2 has accumulated phase (4/3) (-lowest - z)^{3/2} past
    the turning point z = -lowest; an edge is placed every PANEL_PHASE.
    """
    edges = [-length, 0.0]
    depth = length - lowest
    if depth > 0.0:
        k = np.arange(math.ceil(4.0 * depth ** 1.5 / (3.0 * PANEL_PHASE)) + 1)
        z = -lowest - (0.75 * PANEL_PHASE * k) ** (2.0 / 3.0)
        edges.extend(z[(z > -length) & (z < 0.0)])
    edges = np.unique(edges)

    pieces = np.maximum(np.ceil(np.diff(edges) / MAX_PANEL).astype(int), 1)
    parts = [np.linspace(a, b, p + 1)[:-1] for a, b, p in zip(edges[:-1], edges[1:], pieces)]
    return np.append(np.concatenate(parts), edges[-1])


def airy_rows(points, z):
    """Matrix Ai(points_a + z_k)"""
    return airy_ai_pair(np.add.outer(points, z))[0]


def uses_complement(spec, gap, xs, ys):
    """True when the (-inf, 0) integral is taken through heat_kernel()"""
    if gap > spec.split_gap:
        return False
    exponent = gap ** 3 / 12.0 - gap * (np.min(xs) + np.min(ys)) / 2.0
    return exponent <= COMPLEMENT_BUDGET


def _points(values, name):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if not np.all(np.isfinite(values)):
        raise NumericError(f"Kernel coordinates {name} must be finite")
    return values


def assemble_block(spec, i, j, xs, ys, rows_x=None, rows_y=None):
    """
    L_ij on the grid xs x ys, 0-based block indices

    rows_x / rows_y are optional precomputed airy_rows(xs, z) on the
    positive z-points of spec; operators reuse them across blocks.
    """
    z_pos, w_pos = spec.positive_points
    s = spec.times[i] - spec.times[j]

    if s >= 0 or uses_complement(spec, -s, xs, ys):
        if rows_x is None:
            rows_x = airy_rows(xs, z_pos)
        if rows_y is None:
            rows_y = rows_x if ys is xs else airy_rows(ys, z_pos)
        block = (rows_x * (w_pos * np.exp(-s * z_pos))) @ rows_y.T
        if s < 0:
            block -= heat_kernel(-s, xs[:, None], ys[None, :])
        return block

    gap = -s
    z_neg, w_neg = spec.negative_points(gap, min(np.min(xs), np.min(ys)))
    left = airy_rows(xs, z_neg)
    right = left if ys is xs else airy_rows(ys, z_neg)
    return -(left * (w_neg * np.exp(gap * z_neg))) @ right.T


def l_block(spec, i, j, xs, ys):
    """
    L_ij(x, y) for every x in xs and y in ys

    Args:
        spec: KernelSpec
        i, j: block indices in 1..m
        xs, ys: coordinates

    Returns:
        ndarray of shape (len(xs), len(ys))

    Raises:
        KernelIndexError: index outside 1..m
        NumericError: non-finite coordinate
    """
    a = spec.check_index(i)
    b = spec.check_index(j)
    return assemble_block(spec, a, b, _points(xs, 'xs'), _points(ys, 'ys'))


def l_entry(spec, i, j, x, y):
    """L_ij(x, y)"""
    return float(l_block(spec, i, j, [x], [y])[0, 0])


def k_entry(spec, i, j, x, y):
    """
    K_ij(x, y) = L_ij(x, y) chi_j(y)

    The indicator is right-continuous: y = xi_j counts as inside.
    """
    b = spec.check_index(j)
    if not math.isfinite(y):
        raise NumericError("Kernel coordinates must be finite")
    if y < spec.thresholds[b]:
        return 0.0
    return l_entry(spec, i, j, x, y)


def airy_kernel(x, y):
    """
    Christoffel-Darboux form of the Airy kernel (the i = j block)

    (Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y), with Ai'(x)^2 - x Ai(x)^2
    on the diagonal.
    """
    ai_x, aip_x = airy_ai_pair(np.array([float(x)]))
    ai_y, aip_y = airy_ai_pair(np.array([float(y)]))
    if x == y:
        return float(aip_x[0] ** 2 - x * ai_x[0] ** 2)
    return float((ai_x[0] * aip_y[0] - aip_x[0] * ai_y[0]) / (x - y))
