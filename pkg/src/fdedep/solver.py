"""Fixed points of the integral operator ``T`` and the stepwise solver.

For a problem ``x'(t) = f(t, x_t)``, ``x_sigma = phi`` the unknown is the
perturbation ``eta`` of the frozen extension ``phi~``::

    (T eta)(t) = int_0^t f(sigma + s, phi~_{sigma+s} + eta_s) ds,   t in [0, a]
    (T eta)(t) = 0,                                                   t in [-r, 0]

and ``x(sigma + t) = phi~(sigma + t) + eta(t)``.  Integrals are cumulative
composite trapezoid sums on the uniform grid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EvalError, FdeError, NoConvergence, SelfMapViolation, StepUnderflow
from .grid import (
    EtaFn,
    HistorySegment,
    Trajectory,
    domain_tol,
    snap,
    sup_dist,
    tilde_extend,
)
from .rhs import SAFETY, Rhs, Tube, estimate_bound

log = logging.getLogger(__name__)

__all__ = [
    "STEP_MARGIN",
    "PicardOutcome",
    "ProblemSpec",
    "SolveResult",
    "StepRecord",
    "apply_T",
    "choose_step",
    "extend_solution",
    "picard_solve",
    "residual",
    "restart_problem",
    "solve",
    "splice",
]

STEP_MARGIN = 0.5


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    sigma: float
    r: float
    phi: HistorySegment
    f: Rhs
    horizon: float
    h: float

    def __post_init__(self):
        h = float(self.h)
        if not h > 0:
            raise ValueError("grid step must be positive")
        nr = snap(self.r, h)
        object.__setattr__(self, "r", nr * h)
        object.__setattr__(self, "horizon", snap(self.horizon, h) * h)
        object.__setattr__(self, "sigma", float(self.sigma))
        if abs(self.phi.h - h) > 1e-12 * h or self.phi.n_nodes != nr + 1:
            raise ValueError(f"phi must be sampled on [-r, 0] with step h ({nr + 1} nodes)")
        if self.f.dim != self.phi.dim:
            raise ValueError(f"rhs has {self.f.dim} components, phi has {self.phi.dim}")
        if self.f.max_delay > self.r + domain_tol(self.r):
            raise ValueError(f"rhs delay {self.f.max_delay} exceeds r = {self.r}")
        if self.horizon <= 0:
            raise ValueError("horizon must be at least one grid step")

    @property
    def r_nodes(self):
        return snap(self.r, self.h)

    @property
    def dim(self):
        return self.phi.dim

    def with_(self, **kw):
        fields = dict(sigma=self.sigma, r=self.r, phi=self.phi, f=self.f, horizon=self.horizon, h=self.h)
        fields.update(kw)
        return ProblemSpec(**fields)


@dataclass
class StepRecord:
    start: float
    length: float
    M: float
    beta_bar: float
    iterations: int
    residual: float
    max_norm: float
    max_rhs: float
    max_slope: float = 0.0
    retries: int = 0
    residuals: list = field(default_factory=list)

    def as_dict(self):
        return dict(vars(self))


@dataclass(eq=False)
class SolveResult:
    x: Trajectory
    eta: EtaFn
    steps: list
    achieved: float
    status: str
    reason: str = ""
    global_residual: float = float("nan")
    rhs_times: np.ndarray = field(default=None, repr=False)
    rhs_values: np.ndarray = field(default=None, repr=False)

    @property
    def completed(self):
        return self.status == "Completed"

    def diagnostics(self):
        return {
            "status": self.status,
            "reason": self.reason,
            "achieved": self.achieved,
            "global_residual": self.global_residual,
            "steps": [s.as_dict() for s in self.steps],
        }


class PicardOutcome(NamedTuple):
    eta: EtaFn
    residuals: list
    max_norm: float
    max_rhs: float
    rhs: np.ndarray
    max_slope: float = 0.0


# ---------------------------------------------------------------------------
# vectorized kernels


def _delayed(z, nr, na, h, refs):
    """Values ``z_i(s_j - d)`` for ``s_j = j*h``, j = 0..na; ``z`` covers [-r, a]."""
    out = {}
    j = np.arange(na + 1)
    for i, d in refs:
        col = z[:, i - 1]
        q = d / h
        m = int(round(q))
        if abs(q - m) < 1e-9:
            out[(i, d)] = col[nr - m : nr - m + na + 1]
        else:
            m = int(np.floor(q))
            w = q - m
            hi = nr + j - m
            out[(i, d)] = col[hi] * (1.0 - w) + col[hi - 1] * w
    return out


def _integrand(p, z, na, sigma=None):
    sigma = p.sigma if sigma is None else sigma
    s = p.h * np.arange(na + 1)
    vals = _delayed(z, p.r_nodes, na, p.h, p.f.refs)
    return p.f.evaluate(sigma + s, vals)


def _cumtrapz(F, h):
    out = np.zeros_like(F)
    if F.shape[0] > 1:
        out[1:] = np.cumsum(0.5 * h * (F[1:] + F[:-1]), axis=0)
    return out


def _phi_tilde(p, na):
    return np.vstack([p.phi.values, np.repeat(p.phi.values[-1:], na, axis=0)])


def _T_forward(p, eta_values, na):
    """Forward values of ``T eta`` and the integrand; ``eta_values`` covers [-r, a]."""
    z = _phi_tilde(p, na) + eta_values
    F = _integrand(p, z, na)
    return _cumtrapz(F, p.h), F


# ---------------------------------------------------------------------------
# operations


def apply_T(p, eta, a):
    na = snap(a, p.h)
    if eta.n_nodes != p.r_nodes + na + 1 or eta.r_nodes != p.r_nodes:
        raise ValueError("eta must be defined on [-r, a] on the problem grid")
    fwd, _ = _T_forward(p, eta.values, na)
    return EtaFn.from_forward(fwd, p.h, p.r)


def residual(p, eta):
    """``sup |T eta - eta|`` on the domain of ``eta``."""
    return sup_dist(apply_T(p, eta, eta.a), eta)


def choose_step(M, beta_bar, h, a_max):
    """Largest grid multiple ``a <= a_max`` with ``M * a <= 0.5 * beta_bar``."""
    if M < 0 or not beta_bar > 0:
        raise ValueError("need M >= 0 and beta_bar > 0")
    n_max = snap(a_max, h)
    if n_max < 1:
        raise ValueError("a_max must be at least one grid step")
    if M * h == 0:
        return n_max * h
    q = STEP_MARGIN * beta_bar / (M * h) * (1 + 1e-12)
    if q >= n_max:  # also keeps huge q away from int()
        return n_max * h
    q = np.floor(q)
    n = int(q)
    if n < 1:
        raise StepUnderflow(
            f"M*h = {M * h:.3e} exceeds {STEP_MARGIN}*beta_bar = {STEP_MARGIN * beta_bar:.3e}; refine the grid"
        )
    return min(n, n_max) * h


def picard_solve(p, a, beta, tol=1e-10, max_iter=200, eta_init=None, bound=None):
    """Iterate ``eta <- T eta`` from ``eta_init`` (default 0) until successive
    iterates differ by at most ``tol`` in sup norm.

    Every iterate must stay in ``A(a, beta)``; leaving it raises
    :class:`SelfMapViolation`, as does an integrand exceeding ``bound``.
    """
    na = snap(a, p.h)
    nr = p.r_nodes
    N = p.dim
    if eta_init is None:
        cur = np.zeros((nr + na + 1, N))
    else:
        cur = np.array(eta_init.values if isinstance(eta_init, EtaFn) else eta_init, dtype=float)
        if cur.shape != (nr + na + 1, N):
            raise ValueError("initial iterate has the wrong shape")
    history = []
    max_norm = 0.0
    max_rhs = 0.0
    max_slope = 0.0
    for _ in range(max_iter):
        fwd, F = _T_forward(p, cur, na)
        rhs_max = float(np.max(np.abs(F)))
        max_rhs = max(max_rhs, rhs_max)
        if bound is not None and rhs_max > bound * (1 + 1e-12):
            raise SelfMapViolation(f"|f| reached {rhs_max:.6g} > M = {bound:.6g}", observed=rhs_max)
        nxt = np.zeros_like(cur)
        nxt[nr:] = fwd
        norm = float(np.max(np.abs(fwd)))
        max_norm = max(max_norm, norm)
        if na > 0:
            max_slope = max(max_slope, float(np.max(np.abs(np.diff(fwd, axis=0)))) / p.h)
        if not norm < beta:
            raise SelfMapViolation(f"iterate norm {norm:.6g} >= beta = {beta:.6g}", observed=rhs_max)
        res = float(np.max(np.abs(nxt - cur)))
        history.append(res)
        cur = nxt
        if res <= tol:
            eta = EtaFn(-nr * p.h, p.h, cur, r=p.r)
            return PicardOutcome(eta, history, max_norm, max_rhs, F, max_slope)
    raise NoConvergence(max_iter, history[-1])


def restart_problem(p, eta1, horizon=None):
    """Problem restarted at ``sigma + a1`` from the state ``phi~_{sigma+a1} + eta1_{a1}``."""
    a1 = eta1.a
    na1 = snap(a1, p.h)
    x = _phi_tilde(p, na1) + eta1.values
    seg = HistorySegment(-p.r, p.h, x[na1:])
    if horizon is None:
        horizon = max(p.horizon - a1, p.h)
    return p.with_(sigma=p.sigma + a1, phi=seg, horizon=horizon)


def splice(eta1, eta0):
    """``eta1`` on [0, a1] followed by ``eta1(a1) + eta0(t - a1)`` on [a1, a1 + a0]."""
    f1, f0 = eta1.forward, eta0.forward
    fwd = np.vstack([f1, f1[-1] + f0[1:]])
    return EtaFn.from_forward(fwd, eta1.h, eta1.r)


def extend_solution(p, eta1, target, tol=1e-10, max_iter=200, tube_radius=1.0, beta_bar=None):
    """Extend a fixed point on [0, a1] to one on [0, target].

    Solves the restarted problem on [0, target - a1] and splices.  The
    result is checked against the fixed-point equation of the original
    operator.
    """
    a1 = eta1.a
    if not target > a1:
        raise ValueError("target must exceed the current extent")
    rp = restart_problem(p, eta1, horizon=target - a1)
    res = solve(rp, tube_radius=tube_radius, tol=tol, max_iter=max_iter, beta_bar=beta_bar)
    if not res.completed:
        raise FdeError(f"restart did not complete: {res.reason}")
    eta = splice(eta1, res.eta)
    check = residual(p.with_(horizon=target), eta)
    if check > 10 * tol + 1e-13:
        raise NoConvergence(max_iter, check)
    return eta


def _step_bound(p, a, beta_bar, density):
    x0 = tilde_extend(p.phi, p.sigma, a)
    tube = Tube(x0, beta_bar, p.sigma, p.sigma + a, anchored=True)
    return estimate_bound(p.f, tube, density)


def solve(p, tube_radius=1.0, tol=1e-10, max_iter=200, beta_bar=None, sample_density=8, init=None):
    """Solve on [sigma, sigma + horizon] by repeated bound / step / Picard / splice.

    Never raises for numerical failures: the result carries ``status``
    ``"Stalled"`` and the reason, with the trajectory up to the last
    completed step.  ``init(offset, shape)`` may supply a Picard starting
    iterate (values on [-r, a]) for each step.
    """
    if beta_bar is None:
        beta_bar = 0.5 * tube_radius
    h, nr, N = p.h, p.r_nodes, p.dim
    n_total = snap(p.horizon, h)
    eta = EtaFn.zero(0.0, p.r, h, N)
    steps = []
    rhs_t, rhs_v = [], []
    status, reason = "Completed", ""
    while snap(eta.a, h) < n_total:
        offset = eta.a
        rp = restart_problem(p, eta, horizon=(n_total - snap(offset, h)) * h)
        remaining = rp.horizon
        retries = 0
        try:
            M = _step_bound(rp, remaining, beta_bar, sample_density)
            a = choose_step(M, beta_bar, h, remaining)
            if a < remaining:
                M = _step_bound(rp, a, beta_bar, sample_density)
            out = None
            while out is None:
                na = snap(a, h)
                start = None if init is None else init(offset, (nr + na + 1, N))
                try:
                    out = picard_solve(rp, a, beta_bar, tol, max_iter, eta_init=start, bound=M)
                except SelfMapViolation as exc:
                    retries += 1
                    if retries > 8:
                        raise
                    M = max(2.0 * M, SAFETY * (exc.observed or 0.0))
                    a = choose_step(M, beta_bar, h, a)
                except NoConvergence:
                    retries += 1
                    if retries > 8 or snap(a, h) < 2:
                        raise
                    a = max(1, snap(a, h) // 2) * h
        except (FdeError, EvalError) as exc:
            status, reason = "Stalled", f"{type(exc).__name__} at t = {p.sigma + offset:.6g}: {exc}"
            log.info("solve stalled: %s", reason)
            break
        steps.append(
            StepRecord(
                start=p.sigma + offset,
                length=a,
                M=M,
                beta_bar=beta_bar,
                iterations=len(out.residuals),
                residual=out.residuals[-1],
                max_norm=out.max_norm,
                max_rhs=out.max_rhs,
                max_slope=out.max_slope,
                retries=retries,
                residuals=list(out.residuals),
            )
        )
        rhs_t.append(p.sigma + offset + h * np.arange(out.rhs.shape[0]))
        rhs_v.append(out.rhs)
        eta = splice(eta, out.eta)
    na = snap(eta.a, h)
    x = Trajectory.from_values(_phi_tilde(p, na) + eta.values, h, p.sigma, p.r)
    result = SolveResult(
        x=x,
        eta=eta,
        steps=steps,
        achieved=eta.a,
        status=status,
        reason=reason,
        rhs_times=np.concatenate(rhs_t) if rhs_t else np.zeros(0),
        rhs_values=np.vstack(rhs_v) if rhs_v else np.zeros((0, N)),
    )
    if na > 0:
        result.global_residual = residual(p.with_(horizon=eta.a), eta)
    else:
        result.global_residual = 0.0
    return result
