"""
Fredholm Determinant and Resolvent
==================================

Nyström discretization of K = L chi on (alpha, inf)^m and everything read
off the same LU factorization:

- det(I - K) and log det(I - K)
- the Nyström extensions of Q = (I - K)^{-1} A, P = (I - K)^{-1} A',
  Q~ = A chi (I - K)^{-1} and R = K (I - K)^{-1} at arbitrary points
- the threshold matrices q, p, q~, u, r (ResolventBundle)

Each block j is quadratured by Gauss-Legendre on (xi_j, xi_j + cutoff);
chi vanishes on (alpha, xi_j). Optionally (alpha independence checks) the
left segment (alpha, xi_j) is discretized too; its columns are zero, so
the system stays block triangular and the determinant does not change.

The matrix is symmetrized with D = diag(sqrt(w)): S = D K D, and
det(I - K_n) = det(I - S).

Usage:
    spec = KernelSpec.build(tau=(0.0, 1.0), xi=(0.0, 0.0))
    op = discretize(spec, n=80)
    bundle = resolvent_bundle(op)
    bundle.det, bundle.q, bundle.r
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
import scipy.linalg
from django.conf import settings
from pydantic import BaseModel, ConfigDict

from core.numerics.exceptions import AiryRangeError, DegeneracyError, NumericError
from core.numerics.kernel import airy_rows, assemble_block
from core.numerics.quadrature import gauss_legendre, interval_points
from core.numerics.specfun import airy_ai_pair

logger = logging.getLogger(__name__)


MIN_NODES = 8
MAX_NODES = 512
DEFAULT_NODES = 80
DEFAULT_CUTOFF = 14.0


# =============================================================================
# DISCRETIZATION
# =============================================================================

@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """
    I - K on Gauss-Legendre nodes

    Global node layout: block by block, each block holding its n nodes on
    (xi_j, xi_j + cutoff) followed by left_nodes nodes on (alpha, xi_j).
    """

    spec: object
    n: int
    cutoff: float
    left_nodes: int
    nodes: np.ndarray            # (N,)
    weights: np.ndarray          # (N,)
    blocks: np.ndarray           # (N,) block of each node, 0-based
    inside: np.ndarray           # (N,) chi at each node (1.0 or 0.0)
    matrix: np.ndarray           # (N, N) S = D K D
    threshold_rows: np.ndarray   # (m, N) K_{i b}(xi_i, X)
    threshold_cols: np.ndarray   # (N, m) L_{b j}(X, xi_j+)
    threshold_core: np.ndarray   # (m, m) L_ij(xi_i, xi_j)

    @property
    def m(self):
        return self.spec.m

    @property
    def size(self):
        return self.nodes.size

    @property
    def block_size(self):
        return self.n + self.left_nodes

    @cached_property
    def sqrt_weights(self):
        return np.sqrt(self.weights)

    @cached_property
    def indicator(self):
        """(N, m) with 1 where node alpha belongs to block j"""
        return (self.blocks[:, None] == np.arange(self.m)[None, :]).astype(float)

    @cached_property
    def airy(self):
        """Ai and Ai' at every node"""
        return airy_ai_pair(self.nodes)

    def block_slice(self, j, main_only=False):
        start = j * self.block_size
        stop = start + (self.n if main_only else self.block_size)
        return slice(start, stop)

    def block_nodes(self, j):
        """Nyström nodes on (xi_j, xi_j + cutoff), 0-based block"""
        return self.nodes[self.block_slice(j, main_only=True)]

    @cached_property
    def lu(self):
        """LU factors of I - S (scipy.linalg.lu_factor)"""
        system = np.eye(self.size) - self.matrix
        if not np.all(np.isfinite(system)):
            raise NumericError("Discretized kernel has non-finite entries")
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
            return scipy.linalg.lu_factor(system, check_finite=False)


def _thread_count(threads):
    if threads is None:
        threads = getattr(settings, 'AIRYPROC_THREADS', 1)
    return max(int(threads), 1)


def discretize(spec, n=None, cutoff=None, left_nodes=0, threads=None):
    """
    Nyström discretization of K on m blocks of n nodes

    Args:
        spec: KernelSpec
        n: nodes per block (default AIRYPROC_NODES)
        cutoff: truncation length of each (xi_j, inf) (default AIRYPROC_BLOCK_CUTOFF)
        left_nodes: extra nodes on each (alpha, xi_j), 0 to skip
        threads: worker threads for block assembly (default AIRYPROC_THREADS)

    Returns:
        DiscretizedOperator

    Raises:
        AiryRangeError: n outside 8..512
    """
    n = n or getattr(settings, 'AIRYPROC_NODES', DEFAULT_NODES)
    if not MIN_NODES <= n <= MAX_NODES:
        raise AiryRangeError(f"Nyström nodes per block must be in {MIN_NODES}..{MAX_NODES}, got {n}")
    cutoff = cutoff or getattr(settings, 'AIRYPROC_BLOCK_CUTOFF', DEFAULT_CUTOFF)

    m = spec.m
    xi = spec.thresholds
    rule = gauss_legendre(n)
    left_rule = gauss_legendre(left_nodes) if left_nodes else None

    main, main_weights, left, left_weights = [], [], [], []
    for j in range(m):
        x, w = interval_points(xi[j], xi[j] + cutoff, rule)
        main.append(x)
        main_weights.append(w)
        if left_rule is not None:
            x, w = interval_points(spec.alpha, xi[j], left_rule)
        else:
            x, w = np.empty(0), np.empty(0)
        left.append(x)
        left_weights.append(w)

    # Each block's main nodes plus its threshold, so that one kernel call
    # per pair yields the matrix block and the threshold row and column
    points = [np.append(main[j], xi[j]) for j in range(m)]
    z_pos, _ = spec.positive_points
    rows = [airy_rows(points[j], z_pos) for j in range(m)]

    def pair(task):
        i, j = task
        full = assemble_block(spec, i, j, points[i], points[j], rows[i], rows[j])
        if left_nodes:
            return full, assemble_block(spec, i, j, left[i], points[j], None, rows[j])
        return full, None

    tasks = [(i, j) for i in range(m) for j in range(m)]
    workers = _thread_count(threads)
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(pair, tasks))
    else:
        results = [pair(task) for task in tasks]

    size = n + left_nodes
    total = m * size
    kmat = np.zeros((total, total))
    threshold_rows = np.zeros((m, total))
    threshold_cols = np.zeros((total, m))
    threshold_core = np.zeros((m, m))

    for (i, j), (full, left_full) in zip(tasks, results):
        ri = slice(i * size, i * size + n)
        cj = slice(j * size, j * size + n)
        kmat[ri, cj] = full[:n, :n]
        threshold_rows[i, cj] = full[n, :n]
        threshold_cols[ri, j] = full[:n, n]
        threshold_core[i, j] = full[n, n]
        if left_full is not None:
            li = slice(i * size + n, (i + 1) * size)
            kmat[li, cj] = left_full[:, :n]
            threshold_cols[li, j] = left_full[:, n]

    nodes = np.concatenate([np.concatenate([main[j], left[j]]) for j in range(m)])
    weights = np.concatenate([np.concatenate([main_weights[j], left_weights[j]]) for j in range(m)])
    blocks = np.repeat(np.arange(m), size)
    inside = np.tile(np.concatenate([np.ones(n), np.zeros(left_nodes)]), m)

    root = np.sqrt(weights)
    matrix = root[:, None] * kmat * root[None, :]

    logger.info(f"Discretized m={m} kernel: {total} nodes (n={n}, left={left_nodes}, cutoff={cutoff})")

    return DiscretizedOperator(
        spec=spec,
        n=n,
        cutoff=cutoff,
        left_nodes=left_nodes,
        nodes=nodes,
        weights=weights,
        blocks=blocks,
        inside=inside,
        matrix=matrix,
        threshold_rows=threshold_rows,
        threshold_cols=threshold_cols,
        threshold_core=threshold_core,
    )


# =============================================================================
# DETERMINANT
# =============================================================================

@dataclass(frozen=True, eq=False)
class FredholmResult:
    det: float
    logdet: float
    lu: tuple


def fredholm_det(op):
    """
    det(I - K_n) from the LU factors of I - S

    Returns:
        FredholmResult

    Raises:
        DegeneracyError: singular system or det <= 0
    """
    lu, piv = op.lu
    diagonal = np.diag(lu)
    if np.any(diagonal == 0.0):
        raise DegeneracyError("I - K_n is singular", det=0.0)

    swaps = np.count_nonzero(piv != np.arange(piv.size))
    sign = (-1.0) ** swaps * np.prod(np.sign(diagonal))
    logdet = float(np.sum(np.log(np.abs(diagonal))))
    det = float(sign * np.exp(logdet))

    if sign <= 0:
        logger.warning(f"Non-positive Fredholm determinant {det:.6e} for xi={op.spec.xi.thresholds}")
        raise DegeneracyError(f"det(I - K_n) = {det:.6e} is not positive", det=det)

    return FredholmResult(det=det, logdet=logdet, lu=op.lu)


# =============================================================================
# RESOLVENT
# =============================================================================

@dataclass(frozen=True, eq=False)
class ResolventBundle:
    """Threshold matrices (m x m) and the determinant for one xi"""

    tau: np.ndarray
    xi: np.ndarray
    q: np.ndarray
    p: np.ndarray
    q_tilde: np.ndarray
    u: np.ndarray
    r: np.ndarray
    det: float
    logdet: float

    @property
    def m(self):
        return self.q.shape[0]


class Resolvent:
    """
    Solutions of (I - K) on the Nyström nodes, with extensions

    Node values come from the LU factors of the operator; Q, P, Q~ and R
    at arbitrary points are Nyström interpolants through the kernel.
    """

    def __init__(self, op):
        self.op = op
        self.determinant = fredholm_det(op)

        ai, aip = op.airy
        e = op.indicator
        self.q_nodes = self._solve(e * ai[:, None])
        self.p_nodes = self._solve(e * aip[:, None])
        self.q_tilde_nodes = self._solve(e * (ai * op.inside)[:, None], trans=1).T
        self.r_nodes = self._solve(op.threshold_cols)

    def _solve(self, rhs, trans=0):
        root = self.op.sqrt_weights[:, None]
        return scipy.linalg.lu_solve(self.op.lu, root * rhs, trans=trans, check_finite=False) / root

    # -------------------------------------------------------------------------
    # Kernel rows and columns against the nodes
    # -------------------------------------------------------------------------

    def _rows(self, i, xs):
        """K_{i b}(x, X_beta) for all nodes beta; zero on left segments"""
        op = self.op
        out = np.zeros((xs.size, op.size))
        for k in range(op.m):
            out[:, op.block_slice(k, main_only=True)] = assemble_block(op.spec, i, k, xs, op.block_nodes(k))
        return out

    def _columns(self, j, ys):
        """L_{b j}(X_alpha, y) for all nodes alpha"""
        op = self.op
        out = np.zeros((op.size, ys.size))
        for k in range(op.m):
            block = op.block_slice(k)
            out[block, :] = assemble_block(op.spec, k, j, op.nodes[block], ys)
        return out

    def _inside(self, j, ys):
        return (ys >= self.op.spec.thresholds[j]).astype(float)

    # -------------------------------------------------------------------------
    # Extensions
    # -------------------------------------------------------------------------

    def _extend(self, xs, node_values, base):
        op = self.op
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        weighted = op.weights[:, None] * node_values
        out = np.zeros((xs.size, op.m, op.m))
        for i in range(op.m):
            out[:, i, :] = self._rows(i, xs) @ weighted
            out[:, i, i] += base(xs)
        return out

    def Q(self, xs):
        """Q_ij(x), shape (len(xs), m, m)"""
        return self._extend(xs, self.q_nodes, lambda x: airy_ai_pair(x)[0])

    def P(self, xs):
        """P_ij(x), shape (len(xs), m, m)"""
        return self._extend(xs, self.p_nodes, lambda x: airy_ai_pair(x)[1])

    def Q_tilde(self, ys):
        """Q~_ij(y) (right-continuous at xi_j), shape (len(ys), m, m)"""
        op = self.op
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        weighted = self.q_tilde_nodes * op.weights[None, :]
        ai = airy_ai_pair(ys)[0]
        out = np.zeros((ys.size, op.m, op.m))
        for j in range(op.m):
            values = (weighted @ self._columns(j, ys)).T
            values[:, j] += ai
            out[:, :, j] = values * self._inside(j, ys)[:, None]
        return out

    def R(self, xs, ys):
        """R_ij(x, y), shape (len(xs), len(ys), m, m)"""
        op = self.op
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        rows = [self._rows(i, xs) * op.weights[None, :] for i in range(op.m)]
        out = np.zeros((xs.size, ys.size, op.m, op.m))
        for j in range(op.m):
            node_values = self._solve(self._columns(j, ys))
            inside = self._inside(j, ys)
            for i in range(op.m):
                direct = assemble_block(op.spec, i, j, xs, ys)
                out[:, :, i, j] = (direct + rows[i] @ node_values) * inside[None, :]
        return out

    def bundle(self):
        """Threshold matrices q, p, q~, u, r"""
        op = self.op
        spec = op.spec
        w = op.weights
        ai_xi, aip_xi = airy_ai_pair(spec.thresholds)
        ai, _ = op.airy

        q = np.diag(ai_xi) + op.threshold_rows @ (w[:, None] * self.q_nodes)
        p = np.diag(aip_xi) + op.threshold_rows @ (w[:, None] * self.p_nodes)
        r = op.threshold_core + op.threshold_rows @ (w[:, None] * self.r_nodes)
        u = self.q_tilde_nodes @ ((w * ai * op.inside)[:, None] * op.indicator)
        if op.m == 1:
            q_tilde = q.copy()
        else:
            q_tilde = np.diag(ai_xi) + self.q_tilde_nodes @ (w[:, None] * op.threshold_cols)

        return ResolventBundle(
            tau=spec.times.copy(),
            xi=spec.thresholds.copy(),
            q=q,
            p=p,
            q_tilde=q_tilde,
            u=u,
            r=r,
            det=self.determinant.det,
            logdet=self.determinant.logdet,
        )


def solve(op):
    """Resolvent of a discretized operator"""
    return Resolvent(op)


def resolvent_bundle(op):
    """
    q, p, q~, u, r and det at the thresholds

    Raises:
        DegeneracyError: det(I - K_n) <= 0
    """
    return Resolvent(op).bundle()


def bundle_at(spec, n=None, **kwargs):
    """resolvent_bundle(discretize(spec, n))"""
    return resolvent_bundle(discretize(spec, n, **kwargs))


# =============================================================================
# IDENTITY CHECKS
# =============================================================================

@dataclass(frozen=True, eq=False)
class IdentityCheck:
    """max |lhs - rhs| of one identity, and max |rhs| for scale"""

    name: str
    residual: float
    scale: float


def commutator_with_times(tau, matrix):
    """[tau, X]_ij = (tau_i - tau_j) X_ij"""
    return (tau[:, None] - tau[None, :]) * matrix


def theta_product(left, right):
    """left Theta right, Theta the all-ones matrix"""
    return np.outer(left.sum(axis=1), right.sum(axis=0))


def _central(spec, n, h, threads=None):
    plus = bundle_at(spec.shifted(h), n, threads=threads)
    minus = bundle_at(spec.shifted(-h), n, threads=threads)
    centre = bundle_at(spec, n, threads=threads)
    return minus, centre, plus


def _check(name, lhs, rhs):
    return IdentityCheck(name=name, residual=float(np.max(np.abs(lhs - rhs))), scale=float(np.max(np.abs(rhs))))


def check_dq(spec, n=None, h=1e-3):
    """D q = p - q Theta u + [tau, q]"""
    minus, b, plus = _central(spec, n, h)
    derivative = (plus.q - minus.q) / (2 * h)
    rhs = b.p - theta_product(b.q, b.u) + commutator_with_times(b.tau, b.q)
    return _check('dq', derivative, rhs)


def check_du(spec, n=None, h=1e-3):
    """D u = -q~ q"""
    minus, b, plus = _central(spec, n, h)
    derivative = (plus.u - minus.u) / (2 * h)
    return _check('du', derivative, -b.q_tilde @ b.q)


def check_dr(spec, n=None, h=1e-3):
    """D r = -q Theta q~ + [tau, r]"""
    minus, b, plus = _central(spec, n, h)
    derivative = (plus.r - minus.r) / (2 * h)
    rhs = -theta_product(b.q, b.q_tilde) + commutator_with_times(b.tau, b.r)
    return _check('dr', derivative, rhs)


def _coordinate_pair(spec, k, h):
    up = spec.thresholds.copy()
    down = spec.thresholds.copy()
    up[k] += h
    down[k] -= h
    return spec.with_thresholds(up), spec.with_thresholds(down)


def check_plu(spec, n=None, h=1e-3):
    """d u_ij / d xi_k = -q~_ik q_kj for every k"""
    b = bundle_at(spec, n)
    residual = 0.0
    scale = 0.0
    for k in range(spec.m):
        up, down = _coordinate_pair(spec, k, h)
        derivative = (bundle_at(up, n).u - bundle_at(down, n).u) / (2 * h)
        rhs = -np.outer(b.q_tilde[:, k], b.q[k, :])
        residual = max(residual, float(np.max(np.abs(derivative - rhs))))
        scale = max(scale, float(np.max(np.abs(rhs))))
    return IdentityCheck(name='plu', residual=residual, scale=scale)


def check_logdet_gradient(spec, n=None, h=1e-3):
    """d log det / d xi_j = r_jj"""
    b = bundle_at(spec, n)
    derivative = np.empty(spec.m)
    for k in range(spec.m):
        up, down = _coordinate_pair(spec, k, h)
        derivative[k] = (bundle_at(up, n).logdet - bundle_at(down, n).logdet) / (2 * h)
    return _check('logdet_gradient', derivative, np.diag(b.r))


def check_second_logdet(spec, n=None, h=1e-2):
    """D^2 log det = -Tr(q Theta q~)"""
    minus, b, plus = _central(spec, n, h)
    derivative = (plus.logdet - 2 * b.logdet + minus.logdet) / h ** 2
    rhs = -np.trace(theta_product(b.q, b.q_tilde))
    return _check('second_logdet', np.array([derivative]), np.array([rhs]))


def convergence_check(spec, n=None):
    """|det(I - K_2n) - det(I - K_n)|"""
    n = n or getattr(settings, 'AIRYPROC_NODES', DEFAULT_NODES)
    coarse = fredholm_det(discretize(spec, n)).det
    fine = fredholm_det(discretize(spec, min(2 * n, MAX_NODES))).det
    return abs(fine - coarse)


def cutoff_check(spec, n=None, factor=2.0):
    """|det| change when every block cutoff is multiplied by factor"""
    cutoff = getattr(settings, 'AIRYPROC_BLOCK_CUTOFF', DEFAULT_CUTOFF)
    base = fredholm_det(discretize(spec, n, cutoff=cutoff)).det
    wide = fredholm_det(discretize(spec, n, cutoff=cutoff * factor)).det
    return abs(wide - base)


class AlphaReport(BaseModel):
    """Largest deviation of bundle and det over a set of alphas"""

    model_config = ConfigDict(frozen=True)

    alphas: Tuple[float, ...]
    bundle_deviation: float
    det_deviation: float


def alpha_independence_check(spec, alphas, n=None):
    """
    Recompute the bundle with the left segments (alpha, xi_j) discretized

    Returns:
        AlphaReport with max deviations from the alpha-free computation
    """
    n = n or getattr(settings, 'AIRYPROC_NODES', DEFAULT_NODES)
    reference = bundle_at(spec, n)
    left_nodes = max(MIN_NODES, n // 2)

    bundle_deviation = 0.0
    det_deviation = 0.0
    for alpha in alphas:
        b = bundle_at(spec.with_alpha(alpha), n, left_nodes=left_nodes)
        for name in ('q', 'p', 'q_tilde', 'u', 'r'):
            gap = np.max(np.abs(getattr(b, name) - getattr(reference, name)))
            bundle_deviation = max(bundle_deviation, float(gap))
        det_deviation = max(det_deviation, abs(b.det - reference.det))

    logger.info(f"Alpha independence over {list(alphas)}: bundle {bundle_deviation:.2e}, det {det_deviation:.2e}")
    return AlphaReport(alphas=tuple(alphas), bundle_deviation=bundle_deviation, det_deviation=det_deviation)
