"""Generalized Golub-Kahan bidiagonalization for saddle-point systems.

Solves

    [ M   A ] [w]   [g]
    [ A^T 0 ] [p] = [r]

with M symmetric positive definite, A of full column rank and the dual
weight N = (1/eta) I.  The upper right-hand side is first eliminated
(u = w - M^{-1} g, b = r - A^T M^{-1} g), then the bidiagonalization builds
M-orthonormal v_k and N-orthonormal q_k while updating the iterates u_k, p_k
with short recurrences.  Every application of M^{-1} goes through an inner
solver whose stopping tolerance is chosen per outer iteration by a policy
from :mod:`gkbrelax.relaxation`.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalBreakdown, TrivialRhsError
from .inner import CGInner, InnerReport
from .linalg import as_csr, check_symmetric, vector, weighted_norm
from .relaxation import PolicyInputs

LUCKY_BREAKDOWN = 1e-14

CONVERGED = "converged"
MAXIT = "maxit"
BREAKDOWN_CONVERGED = "breakdown-converged"


@dataclass
class SaddleSystem:
    M: object
    A: object
    eta: float = 1.0
    g: np.ndarray | None = None
    r: np.ndarray | None = None

    def __post_init__(self):
        self.M = as_csr(self.M)
        self.A = as_csr(self.A)
        m, n = self.A.shape
        if self.M.shape != (m, m):
            raise DimensionError(f"M has shape {self.M.shape}, expected ({m}, {m}) to match A {self.A.shape}")
        self.g = np.zeros(m) if self.g is None else vector(self.g).copy()
        self.r = np.zeros(n) if self.r is None else vector(self.r).copy()
        if self.g.size != m:
            raise DimensionError(f"g has length {self.g.size}, expected {m}")
        if self.r.size != n:
            raise DimensionError(f"r has length {self.r.size}, expected {n}")
        if not self.eta > 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        self.eta = float(self.eta)
        check_symmetric(self.M, 1e-12, "M")

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    def block_matrix(self):
        """Dense 2x2 block matrix (oracle use only)."""
        M, A = self.M.toarray(), self.A.toarray()
        return np.block([[M, A], [A.T, np.zeros((self.n, self.n))]])


@dataclass
class GkbOptions:
    outer_tol: float = 1e-7
    delay: int = 3
    maxit: int | None = None
    tau: float | None = None
    tol_cap: float = 0.1
    inner_maxit: int | None = None
    record_basis: bool = False
    track_residual: bool = False

    def __post_init__(self):
        if not 0.0 < self.outer_tol < 1.0:
            raise ValueError(f"outer_tol must lie in (0, 1), got {self.outer_tol}")
        if self.delay < 1:
            raise ValueError(f"delay must be >= 1, got {self.delay}")
        if not 0.0 < self.tol_cap <= 1.0:
            raise ValueError(f"tol_cap must lie in (0, 1], got {self.tol_cap}")
        if self.maxit is not None and self.maxit < 1:
            raise ValueError(f"maxit must be >= 1, got {self.maxit}")


@dataclass
class GkbState:
    k: int
    alpha: list
    beta: list
    zeta: list
    v: np.ndarray
    q: np.ndarray
    d_vec: np.ndarray
    u: np.ndarray
    p: np.ndarray
    cum_inner: int = 0
    tol_history: list = field(default_factory=list)
    inner_history: list = field(default_factory=list)
    V: list | None = None
    Q: list | None = None
    lucky: bool = False
    beta_next: float | None = None


@dataclass
class IterRecord:
    k: int
    inner_iterations: int
    cum_inner: int
    inner_tol_used: float
    zeta_abs: float | None = None
    lower_bound: float | None = None
    dual_residual: float | None = None
    true_error: float | None = None


CSV_HEADER = ["k", "inner_iters", "cum_inner", "tol_used", "zeta_abs", "lower_bound", "dual_residual", "true_error"]


def _fmt(x):
    return "" if x is None else repr(float(x))


@dataclass
class RunLog:
    records: list = field(default_factory=list)
    status: str | None = None
    final_lower_bound: float | None = None

    @property
    def cum_inner(self):
        return sum(rec.inner_iterations for rec in self.records)

    @property
    def converged(self):
        return self.status in (CONVERGED, BREAKDOWN_CONVERGED)

    @property
    def outer_iterations(self):
        return max((rec.k for rec in self.records), default=0)

    def add(self, rec):
        self.records.append(rec)

    def column(self, name):
        return [getattr(rec, name) for rec in self.records]

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in self.records:
            writer.writerow([rec.k, rec.inner_iterations, rec.cum_inner, _fmt(rec.inner_tol_used),
                             _fmt(rec.zeta_abs), _fmt(rec.lower_bound), _fmt(rec.dual_residual),
                             _fmt(rec.true_error)])

    def to_csv(self, path=None):
        if path is None:
            buf = io.StringIO()
            self.write_csv(buf)
            return buf.getvalue()
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)


@dataclass
class GkbResult:
    u: np.ndarray
    p: np.ndarray
    w: np.ndarray
    log: RunLog
    state: GkbState | None
    b: np.ndarray
    shift: np.ndarray

    @property
    def status(self):
        return self.log.status

    @property
    def converged(self):
        return self.log.converged

    @property
    def cum_inner(self):
        return self.log.cum_inner


def transform_rhs(system, inner_solver, tol):
    """Eliminate g: shift = M^{-1} g (inexact, at `tol`), b = r - A^T shift."""
    if not np.any(system.g):
        return system.r.copy(), np.zeros(system.m), InnerReport(0, 0.0, True)
    shift, report = inner_solver(system.g, tol)
    b = system.r - system.A.T @ shift
    return b, shift, report


def recover_w(u, shift):
    return vector(u) + vector(shift)


def dual_residual(system, u, b):
    """||b - A^T u||_2, evaluated explicitly."""
    return float(np.linalg.norm(b - system.A.T @ vector(u)))


def true_error_M(u, u_star, M):
    return weighted_norm(vector(u) - vector(u_star), M)


def _m_normalize(w, M, what):
    alpha = weighted_norm(w, M)
    if not alpha > 0.0 or not math.isfinite(alpha):
        raise NumericalBreakdown(f"{what}: alpha = {alpha}; A q lies in the kernel of the inexact solve")
    return alpha, w / alpha


def gkb_init(system, b, inner_solver, inner_tol, record_basis=False):
    """First bidiagonalization step; returns the state after iteration 1."""
    b = vector(b)
    eta = system.eta
    beta1 = math.sqrt(eta) * float(np.linalg.norm(b))
    if beta1 == 0.0:
        raise TrivialRhsError("b = 0: the transformed solution is u = 0, p = 0")
    q = eta * b / beta1
    w, report = inner_solver(system.A @ q, inner_tol)
    alpha, v = _m_normalize(w, system.M, "gkb_init")
    zeta = beta1 / alpha
    d = q / alpha
    state = GkbState(k=1, alpha=[alpha], beta=[beta1], zeta=[zeta], v=v, q=q, d_vec=d,
                     u=zeta * v, p=-zeta * d, cum_inner=report.iterations,
                     tol_history=[inner_tol], inner_history=[report.iterations])
    if record_basis:
        state.V, state.Q = [v], [q]
    return state


def gkb_step(state, system, inner_solver, inner_tol):
    """Advance `state` by one outer iteration (in place) and return it.

    A vanishing beta_{k+1} means the current subspace already contains the
    solution: the state is flagged `lucky` and left otherwise unchanged.
    """
    eta, M, A = system.eta, system.M, system.A
    alpha_k = state.alpha[-1]
    gvec = eta * (A.T @ state.v) - alpha_k * state.q
    beta = math.sqrt(float(np.dot(gvec, gvec)) / eta)
    state.beta_next = beta
    if beta <= LUCKY_BREAKDOWN * state.beta[0]:
        state.lucky = True
        return state
    q = gvec / beta
    w, report = inner_solver(A @ q - beta * (M @ state.v), inner_tol)
    alpha, v = _m_normalize(w, M, f"gkb_step k={state.k + 1}")
    zeta = -(beta / alpha) * state.zeta[-1]
    d = (q - beta * state.d_vec) / alpha

    state.k += 1
    state.alpha.append(alpha)
    state.beta.append(beta)
    state.zeta.append(zeta)
    state.v, state.q, state.d_vec = v, q, d
    state.u = state.u + zeta * v
    state.p = state.p - zeta * d
    state.cum_inner += report.iterations
    state.tol_history.append(inner_tol)
    state.inner_history.append(report.iterations)
    state.beta_next = None
    if state.V is not None:
        state.V.append(v)
        state.Q.append(q)
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.p))):
        raise NumericalBreakdown(f"non-finite iterate at k={state.k}")
    return state


def lower_bound_rel(zeta, k, d):
    """Relative delayed error estimate sqrt(sum_{k-d<i<=k} z_i^2 / sum_{i<=k} z_i^2).

    Returns None when k < d (not enough coefficients yet).
    """
    if k < d:
        return None
    z2 = np.square(np.asarray(zeta[:k], dtype=np.float64))
    total = float(np.sum(z2))
    if total == 0.0:
        return 0.0
    return math.sqrt(float(np.sum(z2[k - d:k])) / total)


def lower_bound_abs(zeta, k, d):
    """Absolute lower bound sqrt(sum_{i=k+1}^{k+d+1} zeta_i^2) on ||u_k - u*||_M.

    Needs zeta_1 .. zeta_{k+d+1}; returns None otherwise.
    """
    if len(zeta) < k + d + 1:
        return None
    z = np.asarray(zeta[k:k + d + 1], dtype=np.float64)
    return math.sqrt(float(np.dot(z, z)))


def gkb_solve(system, options=None, policy=None, inner_solver=None, w_star=None, deflation=None):
    """Run the outer iteration until the delayed lower bound drops below `outer_tol`.

    `w_star` (a reference solution of the original system) enables the
    true-error column of the log.  `deflation` is a
    :class:`gkbrelax.transforms.DeflationBasis`; its directions are projected
    out of b before the iteration and restored by a coarse correction.
    """
    from .relaxation import RelaxPolicy
    from .transforms import deflate_rhs, deflation_correction

    options = options or GkbOptions()
    policy = policy or RelaxPolicy("constant")
    if inner_solver is None:
        inner_solver = CGInner(system.M, options.inner_maxit)
    tau = options.tau if options.tau is not None else policy.tau
    maxit = options.maxit if options.maxit is not None else 10 * system.n
    track = options.track_residual or policy.needs_residual
    M = system.M
    policy.reset()

    log = RunLog()
    b_full, shift, report = transform_rhs(system, inner_solver, tau)
    setup_iters = report.iterations
    b = b_full
    w_offset, p_offset = shift, np.zeros(system.n)
    if deflation is not None:
        b = deflate_rhs(deflation, b_full)
        u_corr, p_corr, corr_report = deflation_correction(deflation, b_full, system, inner_solver, tau)
        setup_iters += corr_report.iterations
        w_offset = shift + u_corr
        p_offset = p_corr

    def err(u):
        if w_star is None:
            return None
        return true_error_M(u + w_offset, w_star, M)

    def finish(u, p, state, status, xi):
        log.status, log.final_lower_bound = status, xi
        u_total = u + (w_offset - shift)
        return GkbResult(u=u_total, p=p + p_offset, w=u + w_offset, log=log, state=state,
                         b=b_full, shift=shift)

    log.add(IterRecord(0, setup_iters, setup_iters, tau,
                       dual_residual=float(np.linalg.norm(b)) if track else None,
                       true_error=err(np.zeros(system.m))))

    res = float(np.linalg.norm(b)) if track else None
    try:
        tol = policy.next_tolerance(PolicyInputs(1, [], res))
        state = gkb_init(system, b, inner_solver, min(tol, options.tol_cap), options.record_basis)
    except TrivialRhsError:
        return finish(np.zeros(system.m), np.zeros(system.n), None, BREAKDOWN_CONVERGED, 0.0)

    cum = setup_iters
    d = options.delay
    xi = 1.0

    def record(state, tol):
        nonlocal cum, res
        cum += state.inner_history[-1]
        k = state.k
        lb = lower_bound_rel(state.zeta, k, d) if k > d else None
        if track:
            res = dual_residual(system, state.u, b)
        log.add(IterRecord(k, state.inner_history[-1], cum, tol, abs(state.zeta[-1]), lb,
                           res if track else None, err(state.u)))
        return lb

    lb = record(state, state.tol_history[-1])
    while True:
        if lb is not None:
            xi = lb
        if xi <= options.outer_tol:
            status = CONVERGED
            break
        if state.k >= maxit:
            status = MAXIT
            break
        tol = policy.next_tolerance(PolicyInputs(state.k + 1, [abs(z) for z in state.zeta], res))
        tol = min(tol, options.tol_cap)
        gkb_step(state, system, inner_solver, tol)
        if state.lucky:
            status = BREAKDOWN_CONVERGED
            break
        lb = record(state, tol)
    return finish(state.u, state.p, state, status, xi)
