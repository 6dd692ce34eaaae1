"""Right-hand sides ``f(t, x_t)`` with finitely many discrete delays.

An :class:`Rhs` only ever looks at the state through the point values
``x_i(t - d)`` listed in ``refs``, so every evaluation path (single segment,
whole Picard sweep, tube sampling) feeds it a dict ``{(i, d): array}``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from .errors import EvalError, OutOfDomain
from .grid import Trajectory, domain_tol

__all__ = [
    "SAFETY",
    "CallableRhs",
    "ExprRhs",
    "Rhs",
    "Tube",
    "autonomous",
    "estimate_bound",
    "eval_rhs",
    "parse_rhs",
    "perturbation_basis",
    "random_tube_points",
    "tube_points",
]

SAFETY = 1.25


class Rhs:
    """Interface: ``dim``, ``r``, ``refs`` and ``evaluate(t, values)``."""

    dim: int
    r: float
    refs: tuple

    def evaluate(self, t, values):
        raise NotImplementedError

    @property
    def max_delay(self):
        return max((d for _, d in self.refs), default=0.0)


@dataclass(frozen=True)
class ExprRhs(Rhs):
    components: tuple
    r: float
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        refs = set()
        for node in self.components:
            refs |= E.delayed_refs(node)
            bad = E.free_names(node) - {"t"}
            if bad:
                raise E.ParseError(f"unknown variable(s) {sorted(bad)}")
        object.__setattr__(self, "refs", tuple(sorted(refs)))

    @property
    def dim(self):
        return len(self.components)

    @property
    def source(self):
        return "; ".join(E.to_source(c) for c in self.components)

    def evaluate(self, t, values):
        t = np.asarray(t, dtype=float)
        cols = [np.broadcast_to(E.evaluate(node, {"t": t}, values), t.shape) for node in self.components]
        return np.stack(cols, axis=-1)

    def plus(self, c, g):
        """The right-hand side ``self + c * g`` built as a tree."""
        if g.dim != self.dim:
            raise ValueError("drift has wrong dimension")
        comps = tuple(
            E.Binary("+", f0, E.Binary("*", E.Num(float(c)), gi)) for f0, gi in zip(self.components, g.components)
        )
        return ExprRhs(comps, max(self.r, g.r), {**self.params, **g.params})


class CallableRhs(Rhs):
    """Wrap ``func(t, values) -> array[..., N]`` as a right-hand side."""

    def __init__(self, func, dim, r, refs, name="callable"):
        self.func = func
        self.dim = dim
        self.r = float(r)
        self.refs = tuple(sorted(refs))
        self.name = name

    @property
    def source(self):
        return self.name

    def evaluate(self, t, values):
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self.func(t, values), dtype=float)
        out = np.broadcast_to(out, t.shape + (self.dim,))
        if not np.all(np.isfinite(out)):
            raise EvalError(f"non-finite value from {self.name}")
        return out


def autonomous(g, name="g"):
    """Scalar ODE right-hand side ``x' = g(x)`` (r = 0)."""
    return CallableRhs(lambda t, v: np.asarray(g(v[(1, 0.0)]))[..., None], 1, 0.0, [(1, 0.0)], name)


def parse_rhs(source, N=1, r=0.0, params=None):
    """Parse one expression per component (a list, or text split by ``;``/newlines)."""
    if isinstance(source, (list, tuple)):
        nodes = [E.parse(s, variables=("t",), params=params, n_dim=N, r=r) for s in source]
    else:
        nodes = E.parse_many(source, variables=("t",), params=params, n_dim=N, r=r)
    if len(nodes) != N:
        raise E.ParseError(f"expected {N} component expression(s), got {len(nodes)}")
    return ExprRhs(tuple(nodes), float(r), dict(params or {}))


def eval_rhs(f, t, seg):
    """``f(t, seg)`` for a single history segment; returns an ``(N,)`` vector."""
    if seg.r + domain_tol(seg.r) < f.max_delay:
        raise ValueError(f"segment span {seg.r} shorter than max delay {f.max_delay}")
    values = {(i, d): seg.eval(-d)[i - 1] for i, d in f.refs}
    return np.asarray(f.evaluate(np.asarray(float(t)), values), dtype=float).reshape(f.dim)


@dataclass(frozen=True, eq=False)
class Tube:
    """Neighbourhood ``{(tau, x0_tau + p) : ||p|| <= radius}`` of a solution graph.

    With ``anchored`` the perturbation at time ``tau`` is only allowed on
    ``theta > -(tau - t_start)``, i.e. the set ``{phi~_{sigma+s} + eta_s :
    eta in A(a, radius)}`` that a single solver step explores.
    """

    x0: Trajectory
    radius: float
    t_start: float
    t_end: float
    anchored: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("tube radius must be positive")
        lo, hi = self.x0.sigma, self.x0.sigma + self.x0.a
        if self.t_start < lo - domain_tol(lo) or self.t_end > hi + domain_tol(hi) or self.t_end < self.t_start:
            raise OutOfDomain(self.t_start, lo, hi)

    def times(self):
        x0 = self.x0
        k0 = int(np.ceil((self.t_start - x0.t0) / x0.h - 1e-9))
        k1 = int(np.floor((self.t_end - x0.t0) / x0.h + 1e-9))
        return x0.t0 + x0.h * np.arange(k0, k1 + 1)


def perturbation_basis(refs, r, radius, density, dim=1):
    """Perturbation values at ``refs`` (rows) for the deterministic tube sample.

    Rows: zero, constants +-radius (all components and per component),
    +-tents at ``density`` centres on [-r, 0], and, for at most ten
    references, every sign vertex +-radius.  The set is symmetric, so the
    sampled maximum of a state-convex ``|f|`` grows with the radius.
    """
    if density < 1:
        raise ValueError("sample_density must be >= 1")
    m = len(refs)
    rows = [np.zeros(m)]
    ones = np.ones(m)
    rows += [radius * ones, -radius * ones]
    comps = sorted({i for i, _ in refs})
    if len(comps) > 1:
        for c in comps:
            mask = np.array([1.0 if i == c else 0.0 for i, _ in refs])
            rows += [radius * mask, -radius * mask]
    if r > 0 and m:
        centres = np.linspace(-r, 0.0, density) if density > 1 else np.array([-r / 2])
        width = r / max(density - 1, 1)
        thetas = np.array([-d for _, d in refs])
        for c in centres:
            tent = radius * np.maximum(0.0, 1.0 - np.abs(thetas - c) / width)
            rows += [tent, -tent]
    if 0 < m <= 10:
        for signs in itertools.product((-1.0, 1.0), repeat=m):
            rows.append(radius * np.array(signs))
    P = np.unique(np.array(rows).reshape(len(rows), m), axis=0)
    return P


def _base_values(refs, x0, tau):
    out = {}
    for i, d in refs:
        out[(i, d)] = x0.eval(tau - d)[..., i - 1]
    return out


def tube_points(refs, tube, P):
    """Times (shape ``(n_pert, m)``) and delayed values for basis ``P`` on the tube grid."""
    tau = tube.times()
    base = _base_values(refs, tube.x0, tau)
    T = np.broadcast_to(tau, (P.shape[0], tau.size))
    values = {}
    s = tau - tube.t_start
    for j, ref in enumerate(refs):
        mask = (ref[1] < s - 1e-12) if tube.anchored else np.ones_like(s, dtype=bool)
        values[ref] = base[ref][None, :] + P[:, j : j + 1] * mask[None, :]
    return T, values


def random_tube_points(refs, tube, n, rng):
    """``n`` uniform random tube points: times and delayed values."""
    tau = rng.uniform(tube.t_start, tube.t_end, size=n)
    base = _base_values(refs, tube.x0, tau)
    values = {}
    s = tau - tube.t_start
    for ref in refs:
        p = rng.uniform(-tube.radius, tube.radius, size=n)
        if tube.anchored:
            p = p * (ref[1] < s)
        values[ref] = base[ref] + p
    return tau, values


def estimate_bound(f, tube, sample_density=8, safety=SAFETY):
    """Sampled bound ``M >= |f(tau, psi)|`` on a tube, inflated by ``safety``.

    Not certified: it is the max over the tube time grid times the
    perturbation basis.  Solvers re-check ``|f| <= M`` on every sweep.
    """
    refs = f.refs
    P = perturbation_basis(refs, tube.x0.r, tube.radius, sample_density, f.dim)
    T, values = tube_points(refs, tube, P)
    F = f.evaluate(T, values)
    return safety * float(np.max(np.abs(F))) if F.size else 0.0
