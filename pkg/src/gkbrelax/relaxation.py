"""Rules that pick the stopping tolerance of each inner solve.

The zeta-driven rules loosen the inner tolerance as the magnitude of the
GKB coefficients |zeta_k| decays; the residual-driven rules divide the
outer target by the current dual residual norm.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import DENSE_CAP, cholesky_factor, densify

TOL_FLOOR = 1e-16

KINDS = ("constant", "adaptive", "predicted", "hybrid", "optimal", "bouras", "simoncini")
ZETA_KINDS = ("adaptive", "predicted", "hybrid", "optimal")
RESIDUAL_KINDS = ("bouras", "simoncini")


@dataclass
class PolicyInputs:
    """What a rule may look at before outer iteration `k`.

    `zeta_hist` holds |zeta_1| ... |zeta_{k-1}|; `residual_norm` is
    ||b - A^T u_{k-1}||_2 (with u_0 = 0, so ||b|| on the first call).
    """

    k: int
    zeta_hist: list = field(default_factory=list)
    residual_norm: float | None = None


def predict_zeta(zeta_hist, steps):
    """Extrapolate |zeta| one or two steps ahead from the last two entries.

    Returns None when fewer than two entries are available.
    """
    if steps not in (1, 2):
        raise ValueError(f"steps must be 1 or 2, got {steps}")
    if len(zeta_hist) < 2:
        return None
    last, before = abs(zeta_hist[-1]), abs(zeta_hist[-2])
    if last <= 0.0 or before <= 0.0:
        raise ValueError("zeta history entries must be nonzero")
    rate = last / before
    return last * rate**steps


def _clip(tol, cap):
    return max(TOL_FLOOR, min(cap, tol))


@dataclass
class RelaxPolicy:
    kind: str = "constant"
    tau: float = 1e-8
    cap: float = 0.1
    c: float = 1.0
    epsilon: float | None = None
    l: float = 1.0
    prev_tol: float | None = None

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; valid: {', '.join(KINDS)}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not 0.0 < self.cap <= 1.0:
            raise ValueError(f"cap must lie in (0, 1], got {self.cap}")
        if self.c <= 0.0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.kind in RESIDUAL_KINDS:
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ValueError(f"policy {self.kind!r} needs epsilon in (0, 1), got {self.epsilon}")
            if self.l <= 0.0:
                raise ValueError(f"l must be positive, got {self.l}")

    @property
    def label(self):
        return self.kind.capitalize()

    @property
    def needs_residual(self):
        return self.kind in RESIDUAL_KINDS

    def reset(self):
        self.prev_tol = None

    def next_tolerance(self, inputs):
        kind, tau, cap = self.kind, self.tau, self.cap
        if kind == "constant":
            return _clip(tau, cap)

        if kind in RESIDUAL_KINDS:
            if inputs.residual_norm is None:
                raise ValueError(f"policy {kind!r} needs the residual norm")
            if inputs.residual_norm == 0.0:
                return cap
            scale = 1.0 if kind == "bouras" else self.l
            return _clip(scale * self.epsilon / inputs.residual_norm, cap)

        hist = [abs(z) for z in inputs.zeta_hist]
        if len(hist) < 2:
            tol = _clip(tau, cap)
            if kind == "hybrid":
                self.prev_tol = tol
            return tol

        last = hist[-1]
        if kind == "adaptive":
            return _clip(tau / last, cap)
        if kind == "optimal":
            return _clip(tau / (self.c * last), cap)
        if kind == "predicted":
            return _clip(tau / predict_zeta(hist, 2), cap)

        # hybrid: largest of the candidates, never below the previous value
        prev = self.prev_tol if self.prev_tol is not None else tau
        candidates = [prev, tau / last, tau / predict_zeta(hist, 1), tau / predict_zeta(hist, 2)]
        tol = _clip(max(candidates), cap)
        self.prev_tol = tol
        return tol


def next_tolerance(policy, inputs):
    return policy.next_tolerance(inputs)


@dataclass
class FixedSchedule:
    """Prescribed tolerance per outer iteration; the last entry repeats.

    Not one of the relaxation rules: used to replay hand-made schedules such
    as a few loose solves followed by tight ones.
    """

    tolerances: list
    tau: float | None = None
    kind: str = "schedule"

    def __post_init__(self):
        if not self.tolerances:
            raise ValueError("schedule needs at least one tolerance")
        if self.tau is None:
            self.tau = min(self.tolerances)

    @property
    def label(self):
        return "Schedule"

    needs_residual = False

    def reset(self):
        pass

    def next_tolerance(self, inputs):
        idx = min(inputs.k, len(self.tolerances)) - 1
        return self.tolerances[idx]


def simoncini_constant(system, m_star, cap=DENSE_CAP):
    """l = sigma_min(S) / (sigma_max(A^T M^{-1}) * m_star) with S = A^T M^{-1} A.

    Returns ``(l, sigma_min_S, sigma_max_ATMinv)``.
    """
    if m_star < 1:
        raise ValueError(f"m_star must be >= 1, got {m_star}")
    M = densify(system.M, cap)
    A = densify(system.A, cap)
    X = scipy.linalg.cho_solve(cholesky_factor(M), A)  # M^{-1} A
    S = A.T @ X
    S = 0.5 * (S + S.T)
    n = S.shape[0]
    sigma_min = float(scipy.linalg.eigh(S, eigvals_only=True, subset_by_index=[0, 0])[0])
    # A^T M^{-1} = X^T; its largest singular value is sqrt(lambda_max(X^T X))
    G = X.T @ X
    sigma_max = float(np.sqrt(scipy.linalg.eigh(0.5 * (G + G.T), eigvals_only=True,
                                                 subset_by_index=[n - 1, n - 1])[0]))
    return sigma_min / (sigma_max * m_star), sigma_min, sigma_max
