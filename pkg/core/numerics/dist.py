"""
Joint Distributions
===================

P(A(tau_1) <= xi_1, ..., A(tau_m) <= xi_m) = det(I - K) by two routes:

- fredholm: the Nyström determinant directly
- ode: the exponential representation

      log det(I - K)(xi) = -int_0^inf eta Tr(q Theta q~)(xi + eta) d eta

  with q, q~ from the ODE trajectory on (0, ode_start) and from Fredholm
  bundles on (ode_start, eta_max)

and 'both', which reports the Fredholm value and the gap between the two.

Usage:
    result = joint_cdf((0.0, 1.0), (0.0, 0.0), DistributionOptions(route='both'))
    result.value, result.residual
"""

import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, Literal, Optional, Tuple

import numpy as np
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field

from core.numerics.exceptions import OdeSingularityError
from core.numerics.fredholm import DEFAULT_NODES, bundle_at, theta_product
from core.numerics.kernel import KernelSpec
from core.numerics.odesys import (
    DEFAULT_ODE_START,
    StepControls,
    SystemParams,
    bootstrap,
    integrate,
    painleve_residual,
    stencil_bundles,
)
from core.numerics.quadrature import gauss_legendre, interval_points

logger = logging.getLogger(__name__)


ROUTES = ('fredholm', 'ode', 'both')
DEFAULT_ETA_MAX = 10.0
DEFAULT_ETA_ORDER = 48
MIN_TAIL_ORDER = 8

# Stands in for +inf: 1 - F2(8) is below 1e-10
MARGINAL_INFINITY = 8.0


@dataclass(frozen=True)
class DistributionOptions:
    """How joint_cdf computes a value"""

    nodes: Optional[int] = None
    route: str = 'fredholm'
    eta_max: Optional[float] = None
    eta_order: int = DEFAULT_ETA_ORDER
    ode_start: Optional[float] = None
    controls: Optional[StepControls] = None
    gradient: bool = False
    threads: Optional[int] = None

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {', '.join(ROUTES)}, got {self.route!r}")

    @property
    def resolved_nodes(self):
        return self.nodes or getattr(settings, 'AIRYPROC_NODES', DEFAULT_NODES)

    @property
    def resolved_eta_max(self):
        return self.eta_max or getattr(settings, 'AIRYPROC_ETA_MAX', DEFAULT_ETA_MAX)

    @property
    def resolved_ode_start(self):
        if self.ode_start is not None:
            return self.ode_start
        return getattr(settings, 'AIRYPROC_ODE_START', DEFAULT_ODE_START)

    @property
    def resolved_controls(self):
        return self.controls or StepControls.from_settings(rtol=1e-10, atol=1e-13)


class DistributionResult(BaseModel):
    """One joint distribution value and how it was obtained"""

    model_config = ConfigDict(frozen=True)

    tau: Tuple[float, ...]
    xi: Tuple[float, ...]
    value: float = Field(gt=0.0, le=1.0)
    route: Literal['fredholm', 'ode', 'both']
    residual: Optional[float] = None
    gradient: Optional[Tuple[float, ...]] = None
    grid: Dict[str, Any] = Field(default_factory=dict)
    runtime_ms: int = Field(ge=0)


# =============================================================================
# EXPONENTIAL REPRESENTATION
# =============================================================================

def _integrand(bundle, eta):
    return eta * float(np.trace(theta_product(bundle.q, bundle.q_tilde)))


def _representation_fredholm(spec, eta_max, order, n, threads=None):
    etas, weights = interval_points(0.0, eta_max, gauss_legendre(order))
    values = np.array([_integrand(bundle_at(spec.shifted(eta), n, threads=threads), eta) for eta in etas])
    tail = values[-1] * (eta_max - etas[-1])
    logger.debug(f"eta-integral on (0, {eta_max}) with {order} nodes, tail estimate {tail:.2e}")
    return -float(np.dot(weights, values))


def _representation_ode(spec, options, grid):
    """
    log det from the ODE trajectory on (0, start) and bundles beyond

    Raises:
        OdeSingularityError: integration failed or left the trusted range
    """
    n = options.resolved_nodes
    eta_max = options.resolved_eta_max
    start = min(options.resolved_ode_start, eta_max)
    params = SystemParams.build(spec.tau, spec.xi)

    etas, weights = interval_points(0.0, start, gauss_legendre(options.eta_order))
    initial = bootstrap(params, shift0=start, n=n)
    trajectory = integrate(initial, 0.0, options.resolved_controls, params, outputs=list(etas) + [0.0])
    near = np.array([
        eta * float(np.trace(theta_product(trajectory.at(eta).q, trajectory.at(eta).q_tilde)))
        for eta in etas
    ])
    integral = float(np.dot(weights, near))

    if eta_max > start:
        order = max(options.eta_order // 2, MIN_TAIL_ORDER)
        far_etas, far_weights = interval_points(start, eta_max, gauss_legendre(order))
        far = np.array([_integrand(bundle_at(spec.shifted(eta), n, threads=options.threads), eta) for eta in far_etas])
        integral += float(np.dot(far_weights, far))

    grid['ode_start'] = start
    grid['ode_states'] = len(trajectory.states)
    grid['ode_logdet_slope'] = float(np.trace(trajectory.at(0.0).r))
    return -integral


def det_via_representation(tau, xi, eta_max=None, source='fredholm', order=DEFAULT_ETA_ORDER, n=None):
    """
    det(I - K) = exp(-int_0^eta_max eta Tr(q Theta q~)(xi + eta) d eta)

    Args:
        tau, xi: times and thresholds
        eta_max: upper limit (default AIRYPROC_ETA_MAX)
        source: 'fredholm' (bundles at every node) or 'ode' (trajectory)
        order: Gauss-Legendre nodes of the eta-integral
        n: Nyström nodes per block

    Returns:
        float
    """
    spec = KernelSpec.build(tau, xi)
    options = DistributionOptions(nodes=n, eta_max=eta_max, eta_order=order)
    if source == 'ode':
        return float(np.exp(_representation_ode(spec, options, {})))
    if source != 'fredholm':
        raise ValueError(f"source must be 'fredholm' or 'ode', got {source!r}")
    return float(np.exp(_representation_fredholm(spec, options.resolved_eta_max, order, options.resolved_nodes)))


# =============================================================================
# JOINT DISTRIBUTION
# =============================================================================

def joint_cdf(tau, xi, options=None):
    """
    P(A(tau_j) <= xi_j for all j)

    Args:
        tau: strictly increasing times
        xi: thresholds
        options: DistributionOptions

    Returns:
        DistributionResult. A failed ODE route falls back to the Fredholm
        value, reports route 'fredholm' and records the reason in grid.

    Raises:
        DegeneracyError: det(I - K_n) <= 0
    """
    started = time.perf_counter()
    options = options or DistributionOptions()
    spec = KernelSpec.build(tau, xi)
    n = options.resolved_nodes

    grid = {
        'nodes': n,
        'cutoff': getattr(settings, 'AIRYPROC_BLOCK_CUTOFF', 14.0),
        'z_order': spec.z_order,
        'z_max': spec.z_max,
    }
    route = options.route
    fredholm_value = None
    gradient = None
    residual = None

    if route in ('fredholm', 'both') or options.gradient:
        bundle = bundle_at(spec, n, threads=options.threads)
        fredholm_value = bundle.det
        if options.gradient:
            gradient = tuple(float(v) for v in np.diag(bundle.r))

    value = fredholm_value
    if route in ('ode', 'both'):
        grid['eta_max'] = options.resolved_eta_max
        grid['eta_order'] = options.eta_order
        try:
            ode_value = float(np.exp(_representation_ode(spec, options, grid)))
        except OdeSingularityError as exc:
            logger.warning(f"ODE route failed for xi={spec.xi.thresholds} ({exc}); using the Fredholm value")
            grid['ode_error'] = str(exc)
            grid['ode_last_shift'] = exc.last_shift
            if fredholm_value is None:
                fredholm_value = bundle_at(spec, n, threads=options.threads).det
            value = fredholm_value
            route = 'fredholm'
        else:
            grid['ode_value'] = ode_value
            if route == 'ode':
                value = ode_value
            else:
                residual = abs(fredholm_value - ode_value)

    runtime_ms = int(round((time.perf_counter() - started) * 1000))
    logger.info(f"F(tau={spec.tau.times}, xi={spec.xi.thresholds}) = {value:.15g} via {route} in {runtime_ms} ms")

    return DistributionResult(
        tau=spec.tau.times,
        xi=spec.xi.thresholds,
        value=min(value, 1.0),
        route=route,
        residual=residual,
        gradient=gradient,
        grid=grid,
        runtime_ms=runtime_ms,
    )


def logdet_gradient(tau, xi, n=None):
    """d log det / d xi_j = r_jj"""
    return np.diag(bundle_at(KernelSpec.build(tau, xi), n).r).copy()


def f2(s_values, route='both', n=None):
    """
    GUE largest-eigenvalue distribution F2(s) (the m = 1 case)

    Each result carries the Painlevé II residual of q in grid.
    """
    results = []
    for s in s_values:
        result = joint_cdf((0.0,), (float(s),), DistributionOptions(nodes=n, route=route, gradient=True))
        stencil = stencil_bundles(KernelSpec.build((0.0,), (float(s),)), n=n)
        grid = {**result.grid, 'painleve_residual': float(painleve_residual(stencil))}
        results.append(result.model_copy(update={'grid': grid}))
    return results


# =============================================================================
# STRUCTURAL CHECKS
# =============================================================================

def _value(tau, xi, n):
    return bundle_at(KernelSpec.build(tau, xi), n).det


def marginal_error(tau, xi, k, n=None):
    """
    |F(tau; xi with xi_k -> inf) - F(tau without k; xi without k)|

    k is 0-based.
    """
    raised = list(xi)
    raised[k] = MARGINAL_INFINITY
    reduced_tau = [t for j, t in enumerate(tau) if j != k]
    reduced_xi = [v for j, v in enumerate(xi) if j != k]
    return abs(_value(tau, raised, n) - _value(reduced_tau, reduced_xi, n))


def time_shift_error(tau, xi, offset, n=None):
    """|F(tau + offset; xi) - F(tau; xi)| (stationarity)"""
    shifted = [t + offset for t in tau]
    return abs(_value(shifted, xi, n) - _value(tau, xi, n))


def factorization_errors(xi_pair, gaps, n=None):
    """
    |F(0, gap; xi_1, xi_2) - F2(xi_1) F2(xi_2)| for every gap

    Decays as the gap grows.
    """
    product = _value((0.0,), (xi_pair[0],), n) * _value((0.0,), (xi_pair[1],), n)
    return [abs(_value((0.0, gap), xi_pair, n) - product) for gap in gaps]


def lattice_values(tau, axes, n=None):
    """F on the product lattice of axes, shaped like the lattice"""
    mesh = np.meshgrid(*axes, indexing='ij')
    values = np.empty(mesh[0].shape)
    for index in np.ndindex(values.shape):
        values[index] = _value(tau, [axis[index] for axis in mesh], n)
    return values


def monotonicity_violation(values):
    """Largest decrease of F along any lattice axis (0.0 when monotone)"""
    worst = 0.0
    for axis in range(values.ndim):
        steps = np.diff(values, axis=axis)
        if steps.size:
            worst = max(worst, float(-np.min(steps)))
    return max(worst, 0.0)
