"""
Matrix ODE System
=================

With D = sum_j d/d xi_j, Theta the all-ones matrix, [tau, X]_ij =
(tau_i - tau_j) X_ij and xi = diag(xi_1, ..., xi_m) the current thresholds,
the threshold matrices of the resolvent satisfy

    D^2 q  = xi q + 2 q Theta q~ q - 2 [tau, r] q
    D^2 q~ = q~ xi + 2 q~ q Theta q~ - 2 q~ [tau, r]
    D r    = -q Theta q~ + [tau, r]

Moving every threshold by the same shift turns this into an ODE in the
shift. For m = 1 it reduces to q'' = s q + 2 q^3 (Painlevé II).

The state (q, Dq, q~, Dq~, r) is integrated with an adaptive explicit
Dormand-Prince 5(4) pair. Initial data come from Fredholm bundles far to
the right (bootstrap()).

Usage:
    params = SystemParams.build(tau=(0.0, 1.0), xi=(0.0, 0.0))
    state = bootstrap(params, shift0=6.0)
    trajectory = integrate(state, 0.0, StepControls(), params)
    trajectory.at(0.0).q
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from django.conf import settings
from pydantic import BaseModel, ConfigDict

from core.numerics.exceptions import NumericError, OdeSingularityError
from core.numerics.fredholm import bundle_at, commutator_with_times, theta_product
from core.numerics.kernel import KernelSpec

logger = logging.getLogger(__name__)


DEFAULT_ODE_START = 6.0
DEFAULT_LEFT_LIMIT = -3.0
STENCIL_STEP = 1e-2


# =============================================================================
# STATE
# =============================================================================

@dataclass(frozen=True, eq=False)
class SystemParams:
    """Times and base thresholds; the state's shift moves the thresholds"""

    tau: np.ndarray
    xi: np.ndarray

    @classmethod
    def build(cls, tau, xi):
        tau = np.asarray(getattr(tau, 'times', tau), dtype=float)
        xi = np.asarray(getattr(xi, 'thresholds', xi), dtype=float)
        if tau.shape != xi.shape or tau.ndim != 1:
            raise ValueError(f"{tau.size} times but {xi.size} thresholds")
        return cls(tau=tau, xi=xi)

    @property
    def m(self):
        return self.tau.size


@dataclass(frozen=True, eq=False)
class SystemState:
    """(q, Dq, q~, Dq~, r) at one shift"""

    shift: float
    q: np.ndarray
    dq: np.ndarray
    q_tilde: np.ndarray
    dq_tilde: np.ndarray
    r: np.ndarray

    FIELDS = ('q', 'dq', 'q_tilde', 'dq_tilde', 'r')

    @property
    def m(self):
        return self.q.shape[0]

    def vector(self):
        return np.concatenate([getattr(self, name).ravel() for name in self.FIELDS])

    @classmethod
    def from_vector(cls, shift, vector, m):
        parts = np.asarray(vector, dtype=float).reshape(len(cls.FIELDS), m, m)
        return cls(shift, *(part.copy() for part in parts))

    @classmethod
    def zeros(cls, shift, m):
        return cls.from_vector(shift, np.zeros(len(cls.FIELDS) * m * m), m)


def rhs(state, params):
    """
    Derivative of the state with respect to the shift

    Returns:
        SystemState whose fields hold the derivatives

    Raises:
        NumericError: non-finite state
    """
    vector = state.vector()
    if not np.all(np.isfinite(vector)):
        raise NumericError(f"Non-finite ODE state at shift {state.shift}")

    q, q_tilde, r = state.q, state.q_tilde, state.r
    thresholds = params.xi + state.shift
    twist = commutator_with_times(params.tau, r)
    q_theta_qt = theta_product(q, q_tilde)

    ddq = thresholds[:, None] * q + 2.0 * q_theta_qt @ q - 2.0 * twist @ q
    ddq_tilde = q_tilde * thresholds[None, :] + 2.0 * q_tilde @ q_theta_qt - 2.0 * q_tilde @ twist
    dr = -q_theta_qt + twist

    return SystemState(state.shift, state.dq, ddq, state.dq_tilde, ddq_tilde, dr)


def painleve_rhs(s, y):
    """q'' = s q + 2 q^3 as a first-order system y = (q, q')"""
    return np.array([y[1], s * y[0] + 2.0 * y[0] ** 3])


# =============================================================================
# INTEGRATOR
# =============================================================================

@dataclass(frozen=True)
class StepControls:
    """
    Step-size control of the Dormand-Prince integrator

    fixed_step disables error control (order studies). left_limit is the
    smallest effective threshold an integration may reach.
    """

    rtol: float = 1e-9
    atol: float = 1e-12
    first_step: Optional[float] = None
    min_step: float = 1e-12
    max_steps: int = 100000
    fixed_step: Optional[float] = None
    left_limit: Optional[float] = None

    @classmethod
    def from_settings(cls, **overrides):
        overrides.setdefault('left_limit', getattr(settings, 'AIRYPROC_ODE_LEFT_LIMIT', DEFAULT_LEFT_LIMIT))
        return cls(**overrides)


class DormandPrince:
    """Explicit Runge-Kutta 5(4) pair with FSAL, over flat numpy vectors"""

    ORDER = 5

    C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
    A = (
        (),
        (1 / 5,),
        (3 / 40, 9 / 40),
        (44 / 45, -56 / 15, 32 / 9),
        (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
        (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
        (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
    )
    B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
    B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

    SAFETY = 0.9
    MIN_FACTOR = 0.2
    MAX_FACTOR = 5.0

    def __init__(self, f):
        self.f = f

    def step(self, t, y, h, k1=None):
        """
        One step of size h

        Returns:
            tuple: (y_new, error_estimate, f(t + h, y_new))
        """
        stages = [self.f(t, y) if k1 is None else k1]
        for s in range(1, 7):
            increment = sum(a * k for a, k in zip(self.A[s], stages) if a)
            stages.append(self.f(t + self.C[s] * h, y + h * increment))
        y_new = y + h * sum(b * k for b, k in zip(self.B, stages) if b)
        error = h * sum((b - c) * k for b, c, k in zip(self.B, self.B_LOW, stages))
        return y_new, error, stages[-1]

    def _initial_step(self, t, y, k1, span, controls):
        if controls.fixed_step:
            return controls.fixed_step
        if controls.first_step:
            return controls.first_step
        scale = controls.atol + controls.rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((k1 / scale) ** 2))
        guess = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        return min(guess, abs(span))

    def solve(self, t0, y0, t_end, controls, outputs=None):
        """
        Integrate from t0 to t_end

        Args:
            t0, y0: initial point
            t_end: final time (either direction)
            controls: StepControls
            outputs: times to stop at exactly (t_end is always kept);
                None records every step

        Returns:
            tuple: (times, values) of the recorded points, t0 included

        Raises:
            OdeSingularityError: step underflow, too many steps or blow-up
        """
        direction = 1.0 if t_end >= t0 else -1.0
        targets = sorted(
            {float(t) for t in (outputs or ())} | {float(t_end)},
            key=lambda value: direction * value,
        )
        targets = [value for value in targets if direction * (value - t0) > 0 and direction * (value - t_end) <= 0]
        keep = None if outputs is None else {float(t) for t in outputs} | {float(t_end)}

        t = float(t0)
        y = np.asarray(y0, dtype=float)
        times, values = [t], [y]
        if not targets:
            return times, values

        k1 = self.f(t, y)
        h = self._initial_step(t, y, k1, t_end - t0, controls)
        steps = 0

        while targets:
            target = targets[0]
            remaining = target - t
            step = direction * h
            hits = abs(remaining) <= h * (1.0 + 1e-9)
            if hits:
                step = remaining
                if abs(step) < controls.min_step * max(1.0, abs(t)):
                    # target coincides with the current point
                    t = target
                    targets.pop(0)
                    if keep is None or t in keep:
                        times.append(t)
                        values.append(y)
                    continue
            if abs(step) < controls.min_step * max(1.0, abs(t)):
                raise OdeSingularityError(f"Step size underflow at shift {t:.6g}", last_shift=t)
            if steps >= controls.max_steps:
                raise OdeSingularityError(f"Step limit {controls.max_steps} reached at shift {t:.6g}", last_shift=t)
            steps += 1

            try:
                with np.errstate(over='ignore', invalid='ignore'):
                    y_new, error, k_new = self.step(t, y, step, k1)
                finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(error))
            except NumericError:
                finite = False

            if controls.fixed_step:
                if not finite:
                    raise OdeSingularityError(f"Solution blew up at shift {t:.6g}", last_shift=t)
                norm = 0.0
            elif finite:
                scale = controls.atol + controls.rtol * np.maximum(np.abs(y), np.abs(y_new))
                with np.errstate(over='ignore'):
                    norm = float(np.sqrt(np.mean((error / scale) ** 2)))
            else:
                norm = math.inf

            if norm > 1.0:
                factor = self.MIN_FACTOR if not math.isfinite(norm) else max(self.MIN_FACTOR, self.SAFETY * norm ** (-1 / self.ORDER))
                logger.debug(f"Rejected step {step:.3e} at shift {t:.6g} (error norm {norm:.3e})")
                h = abs(step) * factor
                continue

            t = target if hits else t + step
            y, k1 = y_new, k_new
            if hits:
                targets.pop(0)
            if keep is None or (hits and t in keep):
                times.append(t)
                values.append(y)

            if not controls.fixed_step:
                factor = self.MAX_FACTOR if norm == 0.0 else min(self.MAX_FACTOR, self.SAFETY * norm ** (-1 / self.ORDER))
                grown = abs(step) * factor
                h = max(h, grown) if hits else grown

        logger.debug(f"Integrated {t0:.6g} -> {t_end:.6g} in {steps} steps")
        return times, values


# =============================================================================
# TRAJECTORY
# =============================================================================

@dataclass(frozen=True, eq=False)
class Trajectory:
    """States recorded along an integration"""

    shifts: np.ndarray
    states: List[SystemState] = field(default_factory=list)

    def at(self, shift):
        """
        State recorded at shift

        Raises:
            KeyError: shift was not an output point
        """
        hits = np.flatnonzero(np.isclose(self.shifts, shift, rtol=0.0, atol=1e-12))
        if hits.size == 0:
            raise KeyError(f"No state recorded at shift {shift}")
        return self.states[hits[0]]

    @property
    def final(self):
        return self.states[-1]


def integrate(initial, target_shift, controls, params, outputs=None):
    """
    Integrate the system from initial.shift to target_shift

    Args:
        initial: SystemState
        target_shift: final shift
        controls: StepControls (None reads the defaults from settings)
        params: SystemParams
        outputs: shifts to record exactly; None records every step

    Returns:
        Trajectory

    Raises:
        OdeSingularityError: step underflow or the left limit would be crossed
    """
    controls = controls or StepControls.from_settings()
    m = initial.m

    if controls.left_limit is not None:
        lowest = float(np.min(params.xi)) + min(target_shift, initial.shift)
        if lowest < controls.left_limit:
            raise OdeSingularityError(
                f"Effective threshold {lowest:.6g} below the trusted limit {controls.left_limit}",
                last_shift=initial.shift,
            )

    def f(shift, vector):
        return rhs(SystemState.from_vector(shift, vector, m), params).vector()

    times, values = DormandPrince(f).solve(initial.shift, initial.vector(), target_shift, controls, outputs)
    states = [SystemState.from_vector(t, y, m) for t, y in zip(times, values)]

    logger.info(f"ODE trajectory {initial.shift:.6g} -> {target_shift:.6g}: {len(states)} recorded states")
    return Trajectory(shifts=np.array(times), states=states)


def stencil_bundles(spec, h=STENCIL_STEP, n=None):
    """Bundles at every threshold shifted by -2h, -h, 0, h, 2h"""
    return [bundle_at(spec.shifted(k * h), n) for k in (-2, -1, 0, 1, 2)]


def _first_derivative(values, h):
    f_2, f_1, _, f1, f2 = values
    return (-f2 + 8 * f1 - 8 * f_1 + f_2) / (12 * h)


def _second_derivative(values, h):
    f_2, f_1, f0, f1, f2 = values
    return (-f2 + 16 * f1 - 30 * f0 + 16 * f_1 - f_2) / (12 * h * h)


def bootstrap(params, shift0=None, n=None, h=STENCIL_STEP):
    """
    Initial state at shift0 from Fredholm bundles

    q, q~, r come from the bundle at shift0; Dq and Dq~ from 5-point
    stencils of neighbouring bundles.
    """
    shift0 = getattr(settings, 'AIRYPROC_ODE_START', DEFAULT_ODE_START) if shift0 is None else shift0
    spec = KernelSpec.build(params.tau, params.xi + shift0)
    stencil = stencil_bundles(spec, h, n)
    centre = stencil[2]
    return SystemState(
        shift=float(shift0),
        q=centre.q,
        dq=_first_derivative([b.q for b in stencil], h),
        q_tilde=centre.q_tilde,
        dq_tilde=_first_derivative([b.q_tilde for b in stencil], h),
        r=centre.r,
    )


# =============================================================================
# RESIDUALS
# =============================================================================

class ResidualReport(BaseModel):
    """Relative residuals of the three equations at one point"""

    model_config = ConfigDict(frozen=True)

    eq1: float
    eq2: float
    eq3: float

    @property
    def worst(self):
        return max(self.eq1, self.eq2, self.eq3)


def _relative(lhs, rhs_value):
    scale = max(float(np.max(np.abs(rhs_value))), float(np.max(np.abs(lhs))), 1e-300)
    return float(np.max(np.abs(lhs - rhs_value))) / scale


def residual_suite(stencil, h=STENCIL_STEP):
    """
    Residuals of the three equations from five bundles

    Args:
        stencil: bundles at thresholds shifted by -2h, -h, 0, h, 2h
        h: stencil spacing

    Returns:
        ResidualReport
    """
    centre = stencil[2]
    params = SystemParams(tau=centre.tau, xi=centre.xi)
    state = SystemState(
        shift=0.0,
        q=centre.q,
        dq=_first_derivative([b.q for b in stencil], h),
        q_tilde=centre.q_tilde,
        dq_tilde=_first_derivative([b.q_tilde for b in stencil], h),
        r=centre.r,
    )
    expected = rhs(state, params)

    report = ResidualReport(
        eq1=_relative(_second_derivative([b.q for b in stencil], h), expected.dq),
        eq2=_relative(_second_derivative([b.q_tilde for b in stencil], h), expected.dq_tilde),
        eq3=_relative(_first_derivative([b.r for b in stencil], h), expected.r),
    )
    logger.info(f"Equation residuals at xi={tuple(centre.xi)}: {report.eq1:.2e}, {report.eq2:.2e}, {report.eq3:.2e}")
    return report


def painleve_residual(stencil, h=STENCIL_STEP):
    """|q'' - s q - 2 q^3| for m = 1"""
    q = [b.q[0, 0] for b in stencil]
    s = stencil[2].xi[0]
    return abs(_second_derivative(q, h) - s * q[2] - 2.0 * q[2] ** 3)
