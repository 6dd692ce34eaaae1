"""Piecewise-linear functions on uniform grids.

Every continuous function in the package (initial data, history segments,
trajectories, perturbations) is a :class:`SampledFn`: node values on a
uniform grid, linearly interpolated in between.  Vector norms are max-abs,
so the sup norm of a sampled function is attained at its nodes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridMismatch, OutOfDomain

__all__ = [
    "EtaFn",
    "HistorySegment",
    "SampledFn",
    "Trajectory",
    "compose_state",
    "domain_tol",
    "in_A",
    "read_csv",
    "sample",
    "segment_at",
    "snap",
    "sup_dist",
    "sup_norm",
    "tilde_extend",
    "write_csv",
]


def domain_tol(t):
    return 1e-9 * max(1.0, abs(float(t)))


def snap(length, h):
    """Number of grid steps closest to ``length / h``."""
    if length < 0:
        raise ValueError(f"negative length {length!r}")
    return int(round(length / h))


def _as_values(values):
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"values must be a non-empty (n, N) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampledFn:
    """Continuous R^N-valued function, linear between nodes ``t0 + k*h``.

    A single node is allowed; its domain is the point ``t0`` (the r = 0
    history segment).
    """

    t0: float
    h: float
    values: np.ndarray

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"grid step must be positive, got {self.h!r}")
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "values", _as_values(self.values))

    @property
    def n_nodes(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def t_end(self):
        return self.t0 + self.h * (self.n_nodes - 1)

    @property
    def times(self):
        return self.t0 + self.h * np.arange(self.n_nodes)

    def node_index(self, t):
        """Index of the grid node at ``t``, or None if ``t`` is not a node."""
        q = (t - self.t0) / self.h
        k = int(round(q))
        if 0 <= k < self.n_nodes and abs(q - k) * self.h <= domain_tol(t):
            return k
        return None

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        """Value at ``t``: shape ``(N,)`` for scalar ``t``, ``(m, N)`` for arrays."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.t0, self.t_end
        tol = 1e-9 * np.maximum(1.0, np.abs(ts))
        bad = (ts < lo - tol) | (ts > hi + tol)
        if np.any(bad):
            raise OutOfDomain(float(ts[bad][0]), lo, hi)
        if self.n_nodes == 1:
            out = np.repeat(self.values, ts.size, axis=0)
        else:
            q = np.clip((ts - lo) / self.h, 0.0, self.n_nodes - 1)
            k = np.minimum(np.floor(q).astype(int), self.n_nodes - 2)
            w = (q - k)[:, None]
            out = self.values[k] * (1.0 - w) + self.values[k + 1] * w
            # exact at nodes
            exact = np.isclose(q, np.round(q), rtol=0.0, atol=1e-12)
            if np.any(exact):
                out[exact] = self.values[np.round(q[exact]).astype(int)]
        return out[0] if scalar else out

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def with_values(self, values):
        return type(self)(**{**self._fields(), "values": values})

    def _fields(self):
        return {"t0": self.t0, "h": self.h, "values": self.values}


@dataclass(frozen=True, eq=False)
class HistorySegment(SampledFn):
    """Element of C([-r, 0], R^N); the argument ``x_t`` of a right-hand side."""

    def __post_init__(self):
        super().__post_init__()
        if abs(self.t_end) > domain_tol(self.t0):
            raise ValueError(f"segment must end at 0, ends at {self.t_end!r}")

    @property
    def r(self):
        return -self.t0

    @classmethod
    def from_values(cls, values, h):
        vals = _as_values(values)
        return cls(-(vals.shape[0] - 1) * h, h, vals)

    @classmethod
    def constant(cls, c, r, h):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        n = snap(r, h) + 1
        return cls.from_values(np.tile(c, (n, 1)), h)


@dataclass(frozen=True, eq=False)
class Trajectory(SampledFn):
    """Element of C([sigma - r, sigma + a], R^N)."""

    sigma: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        nr = snap(self.r, self.h)
        object.__setattr__(self, "r", nr * self.h)
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.n_nodes < nr + 1:
            raise ValueError("trajectory shorter than its history window")

    @property
    def r_nodes(self):
        return snap(self.r, self.h)

    @property
    def a(self):
        return self.h * (self.n_nodes - 1 - self.r_nodes)

    @classmethod
    def from_values(cls, values, h, sigma, r):
        nr = snap(r, h)
        return cls(sigma - nr * h, h, values, sigma=sigma, r=nr * h)

    def _fields(self):
        return {**super()._fields(), "sigma": self.sigma, "r": self.r}


@dataclass(frozen=True, eq=False)
class EtaFn(SampledFn):
    """Perturbation on [-r, a] vanishing on [-r, 0]."""

    r: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        nr = snap(self.r, self.h)
        object.__setattr__(self, "r", nr * self.h)
        if abs(self.t0 + self.r) > domain_tol(self.r):
            raise ValueError("EtaFn domain must start at -r")
        if np.any(self.values[: nr + 1] != 0.0):
            raise ValueError("EtaFn must vanish on [-r, 0]")

    @property
    def r_nodes(self):
        return snap(self.r, self.h)

    @property
    def a(self):
        return self.h * (self.n_nodes - 1 - self.r_nodes)

    @property
    def forward(self):
        """Node values on [0, a]."""
        return self.values[self.r_nodes :]

    @classmethod
    def from_forward(cls, forward, h, r):
        fwd = _as_values(forward)
        nr = snap(r, h)
        if np.any(fwd[0] != 0.0):
            raise ValueError("eta(0) must be 0")
        vals = np.vstack([np.zeros((nr, fwd.shape[1])), fwd])
        return cls(-nr * h, h, vals, r=nr * h)

    @classmethod
    def zero(cls, a, r, h, dim=1):
        return cls.from_forward(np.zeros((snap(a, h) + 1, dim)), h, r)

    def _fields(self):
        return {**super()._fields(), "r": self.r}


def sample(func, t0, h, n_nodes, dim=None):
    """Sample a callable ``t -> value`` (vectorized or not) on a grid."""
    ts = t0 + h * np.arange(n_nodes)
    try:
        vals = np.asarray(func(ts), dtype=float)
        if vals.shape[:1] != (n_nodes,):
            raise ValueError
    except Exception:  # noqa: BLE001  any failure means func is scalar-only
        vals = np.array([np.atleast_1d(func(t)) for t in ts], dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if dim is not None and vals.shape[1] != dim:
        raise ValueError(f"expected {dim} components, got {vals.shape[1]}")
    return vals


def segment_at(x, t):
    """The history segment ``x_t: theta -> x(t + theta)`` on [-r, 0]."""
    lo = x.sigma
    hi = x.sigma + x.a
    if t < lo - domain_tol(t) or t > hi + domain_tol(t):
        raise OutOfDomain(t, lo, hi)
    nr = x.r_nodes
    k = x.node_index(t)
    if k is not None:
        return HistorySegment(-nr * x.h, x.h, x.values[k - nr : k + 1])
    thetas = -x.h * np.arange(nr, -1, -1)
    return HistorySegment(-nr * x.h, x.h, x.eval(np.clip(t + thetas, x.t0, x.t_end)))


def tilde_extend(phi, sigma, a):
    """Trajectory equal to ``phi`` on [sigma - r, sigma], frozen at ``phi(0)`` after."""
    if a < 0:
        raise ValueError(f"extension length must be >= 0, got {a!r}")
    na = snap(a, phi.h)
    vals = np.vstack([phi.values, np.repeat(phi.values[-1:], na, axis=0)])
    return Trajectory.from_values(vals, phi.h, sigma, phi.r)


def in_A(eta, a, beta):
    nr = eta.r_nodes
    if abs(eta.a - a) > domain_tol(a) + 0.5 * eta.h:
        raise GridMismatch(f"eta is defined up to {eta.a!r}, not {a!r}")
    return bool(np.all(eta.values[: nr + 1] == 0.0) and eta.sup_norm() < beta)


def _check_grid(f, g):
    if f.n_nodes != g.n_nodes or f.dim != g.dim:
        raise GridMismatch(f"shapes differ: {f.values.shape} vs {g.values.shape}")
    if abs(f.h - g.h) > 1e-12 * f.h:
        raise GridMismatch(f"grid steps differ: {f.h!r} vs {g.h!r}")


def compose_state(phi_tilde, eta, t):
    """Candidate state ``(phi~)_{sigma+t} + eta_t`` (the reconstruction of x_{sigma+t})."""
    if abs(phi_tilde.h - eta.h) > 1e-12 * eta.h or phi_tilde.r_nodes != eta.r_nodes:
        raise GridMismatch("phi~ and eta must share step and delay span")
    if phi_tilde.n_nodes != eta.n_nodes:
        raise GridMismatch("phi~ and eta must cover the same forward interval")
    base = segment_at(phi_tilde, phi_tilde.sigma + t)
    pert = segment_at(Trajectory(eta.t0, eta.h, eta.values, sigma=0.0, r=eta.r), t)
    return HistorySegment(base.t0, base.h, base.values + pert.values)


def sup_dist(f, g):
    _check_grid(f, g)
    return float(np.max(np.abs(f.values - g.values)))


def sup_norm(f):
    return f.sup_norm()


def write_csv(f, path):
    """Write node table ``t, x1, ..., xN`` with 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(f.dim)])
        for t, row in zip(f.times, f.values):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])


def read_csv(path):
    """Read a node table written by :func:`write_csv` back into a SampledFn."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][0].strip() != "t":
        raise ValueError(f"{path}: expected header 't, x1, ...'")
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    ts = data[:, 0]
    h = (ts[-1] - ts[0]) / (len(ts) - 1) if len(ts) > 1 else 1.0
    return SampledFn(ts[0], h, data[:, 1:])
