"""Continuous dependence experiments on generated families of problems.

A family perturbs a base problem ``(P_0)`` by

* right-hand side drift ``f_k = f_0 + c_k * g``,
* initial-value drift ``phi_k = phi_0 + c_k * psi``,
* start drift ``sigma_k = sigma_0 + c_k * s``,

or, in Fourier mode, replaces an autonomous ``f_0`` by its partial sum of
order ``k``.  Every member is solved with the same settings on the shared
parameter interval ``[0, a']`` and compared with the base solution through
``t -> (x_k(sigma_k + t), x_0(sigma_0 + t))``.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr as E
from .convergence import (
    CONSISTENT,
    REFUTED,
    FnSeq,
    Resolution,
    RhsSeq,
    Verdict,
    Witness,
    check_continuous_convergence,
    check_generalized_cont_convergence,
    check_uniform_on_compacta,
    max_on_random_tube,
    uniform_bound_on_tube,
)
from .errors import DegenerateFit, FdeError
from .grid import HistorySegment, domain_tol, snap
from .rhs import CallableRhs, ExprRhs, autonomous
from .solver import ProblemSpec, solve

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_EPS",
    "DependenceReport",
    "FamilySpec",
    "MemberResult",
    "SolverSettings",
    "build_family",
    "error_profile",
    "estimate_rate",
    "run_dependence",
    "uniqueness_check",
]

DEFAULT_EPS = (0.2, 0.1, 0.05)
HYPOTHESIS_K_MAX = 2**20
PROBE_STEP = 2.0**-6


@dataclass(frozen=True, eq=False)
class FamilySpec:
    """Base problem plus perturbation templates.

    ``c`` is the source of ``c_k`` as an expression in ``k`` (default
    ``"1/k"``); it must be strictly decreasing to 0 or identically 0 (the
    null family).  ``fourier`` holds coefficients for Fourier mode.
    """

    base: ProblemSpec
    K: int
    a_prime: float
    rhs_drift: object = None
    phi_drift: HistorySegment = None
    sigma_drift: float = 0.0
    c: str = "1/k"
    fourier: object = None
    tail_start: int = None
    delta: float = 1.0

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be >= 0")
        if not 0 < self.a_prime:
            raise ValueError("a_prime must be positive")
        if self.tail_start is None:
            object.__setattr__(self, "tail_start", max(1, self.K // 8))
        if self.rhs_drift is not None:
            if self.rhs_drift.dim != self.base.dim:
                raise ValueError("rhs drift has the wrong dimension")
            if self.rhs_drift.max_delay > self.base.r + domain_tol(self.base.r):
                raise ValueError(f"rhs drift delay {self.rhs_drift.max_delay} exceeds r = {self.base.r}")
        if self.phi_drift is not None and self.phi_drift.values.shape != self.base.phi.values.shape:
            raise ValueError("phi drift must be sampled on the grid of the base initial data")
        if self.fourier is not None and (self.base.r != 0 or self.base.dim != 1 or self.fourier.n < self.K):
            raise ValueError("Fourier mode needs a scalar r = 0 base and coefficients up to order K")
        self._check_c()

    def c_fn(self):
        return E.compile_scalar(self.c, variables=("k",))

    def c_values(self, ks):
        ks = np.asarray(ks, dtype=float)
        return np.broadcast_to(np.asarray(self.c_fn()(ks), dtype=float), ks.shape).astype(float)

    def _check_c(self):
        ks = np.arange(1, max(self.K, 2) + 1)
        c = self.c_values(ks)
        c_far = float(self.c_values(np.array([HYPOTHESIS_K_MAX]))[0])
        if np.all(c == 0) and c_far == 0:
            return
        if not (np.all(np.diff(c) < 0) and 0 <= c_far < c[-1] and c_far < 1e-3 * max(1.0, c[0])):
            raise ValueError(f"c_k = {self.c} must be strictly decreasing to 0 (or identically 0)")

    @property
    def null(self):
        if self.fourier is not None:
            return False
        no_drift = self.rhs_drift is None and self.phi_drift is None and self.sigma_drift == 0.0
        return no_drift or not np.any(self.c_values(np.arange(1, max(self.K, 2) + 1)))


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-10
    tube_radius: float = 1.0
    max_iter: int = 200
    sample_density: int = 8

    def kwargs(self):
        return {
            "tol": self.tol,
            "tube_radius": self.tube_radius,
            "max_iter": self.max_iter,
            "sample_density": self.sample_density,
        }


def _member_rhs(spec, k, c):
    f0 = spec.base.f
    if spec.fourier is not None:
        if k == 0:
            return f0
        from .fourier import partial_sum

        return autonomous(partial_sum(spec.fourier, k), name=f"S_{k}")
    g = spec.rhs_drift
    if g is None or k == 0:
        return f0
    if isinstance(f0, ExprRhs) and isinstance(g, ExprRhs):
        return f0.plus(c, g)
    refs = tuple(sorted(set(f0.refs) | set(g.refs)))
    return CallableRhs(
        lambda t, v: f0.evaluate(t, v) + c * g.evaluate(t, v), f0.dim, max(f0.r, g.r), refs, name=f"f0 + {c!r}*g"
    )


def _member(spec, k, c, horizon):
    base = spec.base
    if k == 0:
        return base.with_(horizon=horizon)
    phi = base.phi
    if spec.phi_drift is not None:
        phi = phi.with_values(phi.values + c * spec.phi_drift.values)
    return base.with_(
        sigma=base.sigma + c * spec.sigma_drift,
        phi=phi,
        f=_member_rhs(spec, k, c),
        horizon=horizon,
    )


def build_family(spec, horizon=None):
    """Members ``0..K``; member 0 is the base problem (horizon ``a'`` unless given)."""
    horizon = spec.a_prime if horizon is None else horizon
    c = spec.c_values(np.arange(1, spec.K + 1)) if spec.K else np.zeros(0)
    out = [_member(spec, 0, 0.0, horizon)]
    for k in range(1, spec.K + 1):
        try:
            out.append(_member(spec, k, float(c[k - 1]), horizon))
        except (FdeError, ValueError) as exc:
            raise type(exc)(f"member {k}: {exc}") from None
    return out


def estimate_rate(e, c, tail=None):
    """Least-squares slope of ``log e`` against ``log c``.

    ``tail`` keeps the last ``tail`` points.  Zero errors are excluded;
    fewer than three usable points raise :class:`DegenerateFit`.
    """
    e = np.asarray(e, dtype=float)
    c = np.asarray(c, dtype=float)
    if tail is not None:
        e, c = e[-tail:], c[-tail:]
    ok = (e > 0) & (c > 0) & np.isfinite(e)
    if ok.sum() < 3:
        raise DegenerateFit(f"need at least 3 positive points, have {int(ok.sum())}")
    slope, _ = np.polyfit(np.log(c[ok]), np.log(e[ok]), 1)
    return float(slope)


def error_profile(x0, xk, a_prime):
    """``|x_k(sigma_k + t) - x_0(sigma_0 + t)|`` at the shared nodes of [0, a']."""
    n = snap(a_prime, x0.h)
    i0, ik = x0.r_nodes, xk.r_nodes
    m = min(n, x0.n_nodes - 1 - i0, xk.n_nodes - 1 - ik)
    return np.max(np.abs(xk.values[ik : ik + m + 1] - x0.values[i0 : i0 + m + 1]), axis=1)


@dataclass
class MemberResult:
    k: int
    c: float
    sigma: float
    achieved: float
    status: str
    e: float
    diagnostics: dict = field(repr=False, default_factory=dict)

    def as_dict(self):
        return {
            "k": self.k,
            "c": self.c,
            "sigma": self.sigma,
            "achieved": self.achieved,
            "status": self.status,
            "e": self.e,
            "diagnostics": self.diagnostics,
        }


@dataclass
class DependenceReport:
    members: list
    verdicts: dict
    rate: float
    rate_k: float
    bound: dict
    uniqueness: dict
    untestable: list
    resolution: dict

    @property
    def passed(self):
        return (
            all(v["tag"] != REFUTED for v in self.verdicts.values())
            and self.bound.get("violations", 0) == 0
            and self.uniqueness.get("ok", True)
        )

    def errors(self):
        return np.array([m.e for m in self.members])

    def as_dict(self):
        return {
            "members": [m.as_dict() for m in self.members],
            "verdicts": self.verdicts,
            "rate": self.rate,
            "rate_k": self.rate_k,
            "bound": self.bound,
            "uniqueness": self.uniqueness,
            "untestable": self.untestable,
            "resolution": self.resolution,
        }

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")

    def write_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "c_k", "sigma_k", "achieved", "e_k"])
            for m in self.members:
                w.writerow([m.k, f"{m.c:.17g}", f"{m.sigma:.17g}", f"{m.achieved:.17g}", f"{m.e:.17g}"])


def _solve_all(problems, settings, workers):
    run = lambda p: solve(p, **settings.kwargs())
    if workers <= 1:
        return [run(p) for p in problems]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, problems))


def _paired_distance(x0, xk, rhs_times, sigma_k, sigma0):
    """``max(|sigma_k - sigma_0|, ||x_k(sigma_k+s+.) - x_0(sigma_0+s+.)||)`` per evaluation."""
    nr = x0.r_nodes
    m = min(x0.n_nodes, xk.n_nodes)
    D = np.max(np.abs(xk.values[:m] - x0.values[:m]), axis=1)
    window = np.lib.stride_tricks.sliding_window_view(D, nr + 1).max(axis=-1)  # index j <-> s = j*h
    j = np.rint((rhs_times - sigma_k) / xk.h).astype(int)
    inside = (j >= 0) & (j < window.size)
    out = np.full(rhs_times.shape, np.inf)
    out[inside] = np.maximum(abs(sigma_k - sigma0), window[j[inside]])
    return out


def uniqueness_check(p, settings, other=None, seed=0):
    """Solve ``p`` from three Picard starts and compare the trajectories.

    Starts: zero, the increments of ``other`` (a neighbouring member's
    trajectory), and a small random admissible perturbation.
    """
    rng = np.random.default_rng(seed)
    beta = 0.5 * settings.tube_radius

    def from_other(offset, shape):
        out = np.zeros(shape)
        if other is None:
            return out
        nr = p.r_nodes
        j0 = other.r_nodes + snap(offset, p.h)
        seg = other.values[j0 : j0 + shape[0] - nr]
        out[nr : nr + seg.shape[0]] = seg - seg[0]
        return out

    def random(offset, shape):
        out = np.zeros(shape)
        nr = p.r_nodes
        n = shape[0] - nr
        ramp = np.linspace(0.0, 1.0, n)[:, None]
        out[nr:] = 0.1 * beta * ramp * rng.uniform(-1.0, 1.0, size=(n, shape[1]))
        return out

    runs = [solve(p, **settings.kwargs())]
    runs.append(solve(p, init=from_other, **settings.kwargs()))
    runs.append(solve(p, init=random, **settings.kwargs()))
    if not all(r.completed for r in runs):
        return {"ok": False, "max_diff": None, "reason": "a Picard start did not complete"}
    diff = max(float(np.max(np.abs(r.x.values - runs[0].x.values))) for r in runs[1:])
    return {"ok": bool(diff <= 10 * settings.tol), "max_diff": diff, "threshold": 10 * settings.tol}


def _persistent(check, gaps, ks, eps_ladder, point=None):
    """Refuted if some ``eps`` is reached by every gap on the tail."""
    low = float(np.min(gaps))
    for eps in eps_ladder:
        if low >= eps:
            w = Witness("limit", point or [0.0], [[int(k), point or [0.0]] for k in ks], eps, low)
            return Verdict(check, REFUTED, w, {"eps_ladder": list(eps_ladder)})
    return Verdict(check, CONSISTENT, None, {"eps_ladder": list(eps_ladder), "min_tail_gap": low})


def _hypothesis_verdicts(spec, x0, res, a_prime):
    out = {}
    seq = RhsSeq(lambda k: _member_rhs(spec, k, _c(spec, k)), HYPOTHESIS_K_MAX, "f_k")
    if spec.fourier is None:
        box = seq.as_box_seq(x0, 0.5 * spec.delta, x0.sigma, x0.sigma + a_prime, grid=5)
        out["f_k cont-conv on tube"] = check_continuous_convergence(box, res=res)
    phi0 = spec.base.phi
    if spec.phi_drift is not None:
        psi = spec.phi_drift
        lo = phi0.t0

        def member(k, X):
            return phi0.eval(X[:, 0]) + _c(spec, k) * psi.eval(X[:, 0])

        phis = FnSeq(member, lambda X: phi0.eval(X[:, 0]), [(lo, 0.0)] if lo < 0 else [(0.0, 0.0)], grid=101)
        out["phi_k uniform"] = check_uniform_on_compacta(phis, res=res)
    return out


def _c(spec, k):
    return 0.0 if k == 0 else float(spec.c_values(np.array([k]))[0])


def run_dependence(spec, eps_ladder=DEFAULT_EPS, settings=None, workers=1, seed=0, k_max=HYPOTHESIS_K_MAX):
    """Solve every member on [0, a'] and test both conclusions of the
    dependence statement (common existence interval and uniform convergence
    of solutions) at finite resolution.

    The uniqueness of the base solution is the caller's obligation; it is
    spot-checked from three Picard starts.
    """
    settings = settings or SolverSettings()
    a_prime = snap(spec.a_prime, spec.base.h) * spec.base.h
    problems = build_family(spec, horizon=a_prime)
    results = _solve_all(problems, settings, workers)
    base = results[0]
    untestable = []
    if not base.completed:
        untestable.append(f"base problem stalled: {base.reason}")
    c = np.concatenate([[0.0], spec.c_values(np.arange(1, spec.K + 1))]) if spec.K else np.zeros(1)
    members = []
    for k, (p, r) in enumerate(zip(problems, results)):
        e = float(np.max(error_profile(base.x, r.x, a_prime))) if r.x.n_nodes > r.x.r_nodes else float("nan")
        members.append(MemberResult(k, float(c[k]), p.sigma, r.achieved, r.status, e, r.diagnostics()))

    tail = [m for m in members[1:] if m.k >= spec.tail_start]
    ks = [m.k for m in tail]
    verdicts = {}
    # existence on the common interval
    short = [m.k for m in tail if m.achieved < a_prime - domain_tol(a_prime)]
    verdicts["existence"] = {
        "tag": REFUTED if short else CONSISTENT,
        "a_prime": a_prime,
        "tail_start": spec.tail_start,
        "short_members": short,
    }
    # convergence of solutions
    if tail and base.completed:
        conv_tail = [m for m in tail if m.k >= max(spec.tail_start, spec.K // 2)]
        gaps = np.array([m.e for m in conv_tail])
        errs = _persistent("solution-error", gaps, [m.k for m in conv_tail], eps_ladder)
        gen = _generalized(spec, problems, results, [m.k for m in conv_tail], a_prime, eps_ladder)
        tags = (errs.tag, gen.tag)
        verdicts["convergence"] = {
            "tag": REFUTED if REFUTED in tags else CONSISTENT,
            "errors": errs.as_dict(),
            "generalized": gen.as_dict(),
            "tail_decreasing": bool(np.all(np.diff([m.e for m in tail]) < 0)),
        }
    else:
        untestable.append("convergence: no completed tail members")

    try:
        rate = estimate_rate([m.e for m in tail], [m.c for m in tail])
        rate_k = estimate_rate([m.e for m in tail], ks)
    except DegenerateFit as exc:
        rate = rate_k = None
        untestable.append(f"rate: {exc}")

    res = Resolution(k_max=k_max)
    bound = {}
    if base.completed and not spec.null:
        for name, v in _hypothesis_verdicts(spec, base.x, res, a_prime).items():
            verdicts[name] = v.as_dict()
        bound = _bound_report(spec, problems, results, base, a_prime, seed)
    elif spec.null:
        untestable.append("hypotheses: null family, nothing to check")
    uniq = uniqueness_check(problems[0], settings, results[-1].x if spec.K else None, seed)
    resolution = {
        "h": spec.base.h,
        "a_prime": a_prime,
        "K": spec.K,
        "c": spec.c,
        "eps_ladder": list(eps_ladder),
        "hypothesis_lab": res.as_dict(),
        "solver": settings.kwargs(),
    }
    return DependenceReport(members, verdicts, rate, rate_k, bound, uniq, untestable, resolution)


def _generalized(spec, problems, results, ks, a_prime, eps_ladder):
    base = results[0].x
    s0 = problems[0].sigma

    def member(k, X):
        return results[k].x.eval(X[:, 0])

    def domain(k):
        x = results[k].x
        return ([x.sigma], [x.sigma + x.a])

    # theta_k = theta_0 + u * PROBE_STEP * 2^-(k - k_first), approached from both sides
    thetas = np.linspace(0.0, a_prime, max(2, snap(a_prime, 0.01) + 1))
    k_first = ks[0]
    probes = []
    for th in thetas:
        for u in (-1.0, 0.0, 1.0):

            def gen(k, th=th, u=u):
                x = results[k].x
                off = u * PROBE_STEP * 2.0 ** -(k - k_first)
                return [x.sigma + float(np.clip(th + off, 0.0, min(a_prime, x.a)))]

            probes.append((s0 + th, gen))
    return check_generalized_cont_convergence(
        member, domain, lambda X: base.eval(X[:, 0]), ([s0], [s0 + a_prime]), probes, ks, eps_ladder
    )


def _bound_report(spec, problems, results, base, a_prime, seed):
    seq = RhsSeq(lambda k: problems[k].f, spec.K, "f_k")
    ub = uniform_bound_on_tube(seq, base.x, spec.delta, a_prime)
    radius = 0.5 * spec.delta
    checked = violations = 0
    worst = 0.0
    for k in [0] + list(range(ub.k0, spec.K + 1)):
        r = results[k]
        if r.rhs_times is None or r.rhs_times.size == 0:
            continue
        dist = _paired_distance(base.x, r.x, r.rhs_times, problems[k].sigma, problems[0].sigma)
        inside = dist < radius
        vals = np.max(np.abs(r.rhs_values[inside]), axis=1) if inside.any() else np.zeros(0)
        checked += int(vals.size)
        violations += int(np.sum(vals > ub.M))
        worst = max(worst, float(vals.max()) if vals.size else 0.0)
    ks = [0] + list(range(ub.k0, spec.K + 1))
    random_max = max_on_random_tube(seq, ub.tube, ks, n=10_000, seed=seed)
    return {
        **ub.as_dict(),
        "solver_evaluations_checked": checked,
        "solver_max_inside": worst,
        "violations": violations + int(random_max > ub.M),
        "random_sample_max": random_max,
        "random_sample_size": 10_000,
    }
