"""Falsification-oriented checks for modes of convergence of function sequences.

The definitions involved (pointwise, exhaustive, weakly exhaustive,
continuous convergence, uniform convergence on compacta) are all
forall/exists statements over infinitely many indices and points.  A finite
computation can refute them with an explicit witness, or report that no
counterexample was found at the given resolution.  Verdicts carry that
asymmetry: ``Refuted`` is backed by a re-evaluable witness,
``ConsistentUpTo`` is not a proof.

Resolution model
----------------
* indices: a geometric sample of the tail window ``[k_max - tail, k_max]``;
* probes near a point ``x``: ``x +- s*e_j`` (and the diagonal) for ``s`` on a
  geometric ladder from 1/2 down to ``probe_floor``, clipped to the box;
* metric: max-abs on R^d (the product metric on R x C after reduction to
  the finitely many state values an Rhs reads).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EvalError, ProbeOutOfDomain
from .rhs import SAFETY, Tube, perturbation_basis, random_tube_points, tube_points

__all__ = [
    "CONSISTENT",
    "REFUTED",
    "ConsistencyMatrix",
    "FnSeq",
    "Resolution",
    "RhsSeq",
    "UniformBound",
    "Verdict",
    "Witness",
    "check_continuous_convergence",
    "check_exhaustive",
    "check_generalized_cont_convergence",
    "check_limit_continuity",
    "check_pointwise",
    "check_uniform_on_compacta",
    "check_weak_exhaustive",
    "cross_check",
    "max_on_random_tube",
    "uniform_bound_on_tube",
]

REFUTED = "Refuted"
CONSISTENT = "ConsistentUpTo"


@dataclass(frozen=True)
class Resolution:
    eps_ladder: tuple = (1e-1, 1e-2, 1e-3)
    delta_ladder: tuple = tuple(2.0**-j for j in range(1, 13))
    k_max: int = 2**20
    tail: int = None
    n_indices: int = 65
    probe_floor: float = 2.0**-24
    probes_per_octave: int = 16

    def __post_init__(self):
        if self.tail is None:
            object.__setattr__(self, "tail", self.k_max // 2)
        if not 1 <= self.tail <= self.k_max:
            raise ValueError("tail must lie in 1..k_max")
        for ladder in (self.eps_ladder, self.delta_ladder):
            if list(ladder) != sorted(ladder, reverse=True):
                raise ValueError("ladders must be decreasing")

    @property
    def delta_min(self):
        return min(self.delta_ladder)

    def indices(self):
        lo = max(1, self.k_max - self.tail)
        ks = np.unique(np.round(np.geomspace(lo, self.k_max, self.n_indices)).astype(np.int64))
        return ks

    def offsets(self):
        n = int(round(np.log2(0.5 / self.probe_floor) * self.probes_per_octave))
        return 0.5 * 2.0 ** (-np.arange(n + 1) / self.probes_per_octave)

    def as_dict(self):
        d = asdict(self)
        d["eps_ladder"] = list(self.eps_ladder)
        d["delta_ladder"] = list(self.delta_ladder)
        return d


class FnSeq:
    """Indexed family ``k -> f_k`` on a box in R^d with candidate limit ``f0``.

    ``member(k, X)`` and ``limit(X)`` take points ``X`` of shape ``(m, d)``
    and return shape ``(m,)`` or ``(m, q)``.  Subclasses may override
    :meth:`values` to evaluate many indices at once.
    """

    def __init__(self, member, limit, box, grid=201, name="seq", members_continuous=True):
        self.member = member
        self.limit = limit
        box = np.atleast_2d(np.asarray(box, dtype=float))
        if box.shape[1] != 2 or np.any(box[:, 1] < box[:, 0]):
            raise ValueError("box must be a list of (lo, hi) pairs with lo <= hi")
        self.lo, self.hi = box[:, 0].copy(), box[:, 1].copy()
        self.grid = grid
        self.name = name
        self.members_continuous = members_continuous

    @property
    def d(self):
        return self.lo.size

    def points(self):
        counts = np.broadcast_to(np.atleast_1d(self.grid), (self.d,))
        axes = [
            np.linspace(lo, hi, int(n)) if hi > lo else np.array([lo])
            for lo, hi, n in zip(self.lo, self.hi, counts)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def values(self, ks, X):
        return np.stack([_col(self.member(int(k), X)) for k in ks])

    def limit_values(self, X):
        return _col(self.limit(X))

    def directions(self):
        eye = np.eye(self.d)
        dirs = [eye, -eye]
        if self.d > 1:
            one = np.ones((1, self.d))
            dirs += [one, -one]
        return np.vstack(dirs)

    def probes(self, x, res, floor=None):
        """Probe points near ``x`` and their distances (max-abs) to ``x``."""
        s = res.offsets()
        if floor is not None:
            s = s[s >= floor]
        dirs = self.directions()
        T = (x[None, None, :] + s[None, :, None] * dirs[:, None, :]).reshape(-1, self.d)
        T = np.clip(T, self.lo, self.hi)
        dist = np.max(np.abs(T - x[None, :]), axis=1)
        keep = dist > 0
        return T[keep], dist[keep]



def _col(v):
    v = np.asarray(v, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def _rho(a, b):
    return np.max(np.abs(a - b), axis=-1)


@dataclass
class Witness:
    """Re-evaluable counterexample.

    ``kind`` selects the gap formula for each ``(n, t)`` pair:
    ``limit``: |f_n(t) - f0(point)|; ``oscillation``: |f_n(point) - f_n(t)|;
    ``uniform``: |f_n(t) - f0(t)|; ``limit-oscillation``: |f0(t) - f0(point)|.
    The reported ``gap`` is the minimum over the pairs.
    """

    kind: str
    point: list
    pairs: list
    eps: float
    gap: float

    def reproduce(self, seq):
        x = np.asarray(self.point, dtype=float)[None, :]
        gaps = []
        for n, t in self.pairs:
            t = np.asarray(t, dtype=float)[None, :]
            if self.kind == "limit":
                g = _rho(seq.values([n], t)[0], seq.limit_values(x))
            elif self.kind == "oscillation":
                g = _rho(seq.values([n], x)[0], seq.values([n], t)[0])
            elif self.kind == "uniform":
                g = _rho(seq.values([n], t)[0], seq.limit_values(t))
            else:
                g = _rho(seq.limit_values(t), seq.limit_values(x))
            gaps.append(float(g[0]))
        return min(gaps)


@dataclass
class Verdict:
    check: str
    tag: str
    witness: Witness = None
    resolution: dict = field(default_factory=dict)

    @property
    def refuted(self):
        return self.tag == REFUTED

    def as_dict(self):
        d = {"check": self.check, "tag": self.tag, "resolution": self.resolution}
        d["witness"] = None if self.witness is None else asdict(self.witness)
        return d

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def _consistent(check, res, **extra):
    return Verdict(check, CONSISTENT, None, {**res.as_dict(), **extra})


def _refuted(check, res, witness, **extra):
    return Verdict(check, REFUTED, witness, {**res.as_dict(), **extra})


def _pairs(ks, T):
    return [[int(k), [float(v) for v in t]] for k, t in zip(ks, T)]


def _pts(seq, points):
    return seq.points() if points is None else np.atleast_2d(np.asarray(points, dtype=float))


# ---------------------------------------------------------------------------
# checkers


def check_pointwise(seq, points=None, eps=None, tail=None, res=None):
    """Refuted at ``x`` if ``|f_k(x) - f0(x)| > eps`` on every tail index."""
    res = _res(res, tail)
    eps = min(res.eps_ladder) if eps is None else eps
    X = _pts(seq, points)
    ks = res.indices()
    gap = _rho(seq.values(ks, X), seq.limit_values(X)[None])  # (n_k, m)
    low = np.min(gap, axis=0)
    bad = np.flatnonzero(low > eps)
    if bad.size == 0:
        return _consistent("pointwise", res, eps=eps)
    j = bad[np.argmax(low[bad])]
    w = Witness("limit", list(map(float, X[j])), _pairs(ks, np.repeat(X[j : j + 1], len(ks), 0)), eps, float(low[j]))
    return _refuted("pointwise", res, w, eps=eps)


def _local(seq, x, res, floor=None):
    T, dist = seq.probes(x, res, floor)
    ks = res.indices()
    both = np.vstack([x[None, :], T])
    F = seq.values(ks, both)
    return ks, T, dist, F[:, 0, :], F[:, 1:, :]


def check_exhaustive(seq, points=None, eps_ladder=None, delta_ladder=None, tail=None, res=None):
    """Refuted at ``(x, eps)`` if every ``delta`` admits ``t`` with ``|x - t| < delta``
    and a tail index ``n`` with ``|f_n(x) - f_n(t)| >= eps``."""
    res = _res(res, tail, eps_ladder, delta_ladder)
    best = None
    for x in _pts(seq, points):
        ks, T, dist, Fx, Fp = _local(seq, x, res)
        G = _rho(Fx[:, None, :], Fp)  # (n_k, n_probe)
        for eps in res.eps_ladder:
            gaps, pairs = [], []
            for delta in res.delta_ladder:
                inside = dist < delta
                if not np.any(inside):
                    break
                sub = np.where(inside[None, :], G, -np.inf)
                n_i, p_i = np.unravel_index(np.argmax(sub), sub.shape)
                if sub[n_i, p_i] < eps:
                    break
                gaps.append(sub[n_i, p_i])
                pairs.append([int(ks[n_i]), [float(v) for v in T[p_i]]])
            else:
                gap = float(min(gaps))
                if best is None or (eps, gap) > (best.eps, best.gap):
                    best = Witness("oscillation", list(map(float, x)), pairs, eps, gap)
                break
    if best is None:
        return _consistent("exhaustive", res)
    return _refuted("exhaustive", res, best)


def check_weak_exhaustive(seq, points=None, eps_ladder=None, delta_ladder=None, tail=None, res=None):
    """Refuted at ``(x, eps)`` if every ``delta`` admits a fixed ``t`` with
    ``|x - t| < delta`` whose gap ``|f_n(x) - f_n(t)|`` stays ``>= eps`` on the
    whole tail window.

    Probes closer to ``x`` than half the smallest ladder ``delta`` are not
    used: their eventual behaviour is not resolved by the index window.
    """
    res = _res(res, tail, eps_ladder, delta_ladder)
    floor = 0.5 * res.delta_min
    best = None
    for x in _pts(seq, points):
        ks, T, dist, Fx, Fp = _local(seq, x, res, floor=floor)
        G = _rho(Fx[:, None, :], Fp)
        low = np.min(G, axis=0)  # persistent gap of each probe
        n_arg = np.argmin(G, axis=0)
        for eps in res.eps_ladder:
            gaps, pairs = [], []
            for delta in res.delta_ladder:
                cand = np.where(dist < delta, low, -np.inf)
                p_i = int(np.argmax(cand))
                if not cand[p_i] >= eps:
                    break
                gaps.append(cand[p_i])
                pairs.append([int(ks[n_arg[p_i]]), [float(v) for v in T[p_i]]])
            else:
                gap = float(min(gaps))
                if best is None or (eps, gap) > (best.eps, best.gap):
                    best = Witness("oscillation", list(map(float, x)), pairs, eps, gap)
                break
    if best is None:
        return _consistent("weak-exhaustive", res, probe_floor_weak=floor)
    return _refuted("weak-exhaustive", res, best, probe_floor_weak=floor)


def _battery(x, ks, T, dist, Fp, F0x, res, probes_per_point, d, lo, hi):
    """Probe sequences ``x_n -> x`` (arrays ``(n_k, d)``) with their limit gaps."""
    n = len(ks)
    out = []
    # constant
    out.append(np.repeat(x[None, :], n, 0))
    # geometric approach along coordinate directions
    eye = np.vstack([np.eye(d), -np.eye(d)])
    decay = 2.0 ** -np.arange(n, dtype=float)
    for c in res.delta_min * 2.0 ** -np.arange(probes_per_point):
        for e in eye:
            out.append(np.clip(x[None, :] + c * decay[:, None] * e[None, :], lo, hi))
    seqs = [(s, None) for s in out]
    # adversarial: farthest-from-limit probe within a shrinking radius
    radius = res.delta_min * ks[0] / ks
    G = _rho(Fp, F0x[None, None, :])
    adv_idx = []
    for i in range(n):
        cand = np.where(dist <= radius[i], G[i], -np.inf)
        adv_idx.append(int(np.argmax(cand)) if np.isfinite(cand.max()) else -1)
    if all(j >= 0 for j in adv_idx):
        seqs.append((T[adv_idx], adv_idx))
    return seqs


def check_continuous_convergence(seq, points=None, probes_per_point=4, eps_ladder=None, tail=None, res=None):
    """Refuted if some probe sequence ``x_n -> x`` keeps ``|f_n(x_n) - f0(x)| >= eps``
    on every tail index.  Battery: constant, geometric ``x +- c*2^-j``, and the
    adversarial argmax within radius ``delta_min * k_first / n``."""
    res = _res(res, tail, eps_ladder)
    best = None
    for x in _pts(seq, points):
        ks, T, dist, _, Fp = _local(seq, x, res)
        F0x = seq.limit_values(x[None, :])[0]
        for S, adv in _battery(x, ks, T, dist, Fp, F0x, res, probes_per_point, seq.d, seq.lo, seq.hi):
            if adv is None:
                vals = np.stack([seq.values([k], S[i : i + 1])[0, 0] for i, k in enumerate(ks)])
            else:
                vals = Fp[np.arange(len(ks)), adv]
            g = _rho(vals, F0x[None, :])
            low = float(np.min(g))
            for eps in res.eps_ladder:
                if low >= eps:
                    if best is None or (eps, low) > (best.eps, best.gap):
                        best = Witness("limit", list(map(float, x)), _pairs(ks, S), eps, low)
                    break
    if best is None:
        return _consistent("continuous-convergence", res)
    return _refuted("continuous-convergence", res, best)


def check_uniform_on_compacta(seq, points=None, eps=None, tail=None, res=None):
    """Refuted if ``sup |f_k - f0|`` over the grid and its probe cloud exceeds
    ``eps`` on every tail index."""
    res = _res(res, tail)
    eps = min(res.eps_ladder) if eps is None else eps
    X = _pts(seq, points)
    cloud = [X] + [seq.probes(x, res)[0] for x in X]
    P = np.unique(np.vstack(cloud), axis=0)
    ks = res.indices()
    sup = np.full(len(ks), -np.inf)
    arg = np.zeros((len(ks), seq.d))
    for chunk in np.array_split(P, max(1, len(P) // 4096)):
        g = _rho(seq.values(ks, chunk), seq.limit_values(chunk)[None])
        j = np.argmax(g, axis=1)
        m = g[np.arange(len(ks)), j]
        upd = m > sup
        sup[upd] = m[upd]
        arg[upd] = chunk[j[upd]]
    low = float(np.min(sup))
    if low <= eps:
        return _consistent("uniform-on-compacta", res, eps=eps, sup_gap_final=float(sup[-1]))
    w = Witness("uniform", list(map(float, arg[np.argmin(sup)])), _pairs(ks, arg), eps, low)
    return _refuted("uniform-on-compacta", res, w, eps=eps)


def check_limit_continuity(seq, points=None, eps_ladder=None, delta_ladder=None, res=None):
    """Refuted at ``x`` if for some ``eps`` every ``delta`` admits ``t`` with
    ``|f0(t) - f0(x)| >= eps`` (the candidate limit is discontinuous)."""
    res = _res(res, None, eps_ladder, delta_ladder)
    best = None
    for x in _pts(seq, points):
        T, dist = seq.probes(x, res)
        g = _rho(seq.limit_values(T), seq.limit_values(x[None, :]))
        for eps in res.eps_ladder:
            gaps, pairs = [], []
            for delta in res.delta_ladder:
                cand = np.where(dist < delta, g, -np.inf)
                j = int(np.argmax(cand))
                if not cand[j] >= eps:
                    break
                gaps.append(cand[j])
                pairs.append([0, [float(v) for v in T[j]]])
            else:
                gap = float(min(gaps))
                if best is None or (eps, gap) > (best.eps, best.gap):
                    best = Witness("limit-oscillation", list(map(float, x)), pairs, eps, gap)
                break
    if best is None:
        return _consistent("limit-continuity", res)
    return _refuted("limit-continuity", res, best)


def _res(res, tail=None, eps_ladder=None, delta_ladder=None):
    res = res or Resolution()
    kw = {}
    if tail is not None:
        kw["tail"] = tail
    if eps_ladder is not None:
        kw["eps_ladder"] = tuple(eps_ladder)
    if delta_ladder is not None:
        kw["delta_ladder"] = tuple(delta_ladder)
    if kw:
        res = Resolution(**{**asdict(res), **kw})
    return res


# ---------------------------------------------------------------------------
# consistency matrix


@dataclass
class ConsistencyMatrix:
    verdicts: dict
    inconsistencies: list

    @property
    def ok(self):
        return not self.inconsistencies

    def tags(self):
        return {k: v.tag for k, v in self.verdicts.items()}

    def as_dict(self):
        return {
            "verdicts": {k: v.as_dict() for k, v in self.verdicts.items()},
            "inconsistencies": list(self.inconsistencies),
        }


def cross_check(seq, res=None, points=None):
    """Run every checker and test the implications between their verdicts.

    * continuous convergence <=> pointwise and exhaustive
    * given pointwise: weakly exhaustive <=> continuous limit
    * exhaustive => weakly exhaustive
    * continuous convergence => uniform on compacta (=> back when members are continuous)
    * continuous convergence => continuous limit
    """
    res = res or Resolution()
    v = {
        "pointwise": check_pointwise(seq, points, res=res),
        "exhaustive": check_exhaustive(seq, points, res=res),
        "weak-exhaustive": check_weak_exhaustive(seq, points, res=res),
        "continuous-convergence": check_continuous_convergence(seq, points, res=res),
        "uniform-on-compacta": check_uniform_on_compacta(seq, points, res=res),
        "limit-continuity": check_limit_continuity(seq, points, res=res),
    }
    ok = {k: not x.refuted for k, x in v.items()}
    bad = []
    if ok["continuous-convergence"] != (ok["pointwise"] and ok["exhaustive"]):
        bad.append("continuous convergence disagrees with (pointwise and exhaustive)")
    if ok["pointwise"] and ok["weak-exhaustive"] != ok["limit-continuity"]:
        bad.append("weak exhaustiveness disagrees with continuity of the pointwise limit")
    if ok["exhaustive"] and not ok["weak-exhaustive"]:
        bad.append("exhaustive but not weakly exhaustive")
    if ok["continuous-convergence"] and not ok["uniform-on-compacta"]:
        bad.append("continuous convergence without uniform convergence on compacta")
    if seq.members_continuous and ok["uniform-on-compacta"] and not ok["continuous-convergence"]:
        bad.append("uniform convergence of continuous members without continuous convergence")
    if ok["continuous-convergence"] and not ok["limit-continuity"]:
        bad.append("continuous convergence to a discontinuous limit")
    return ConsistencyMatrix(v, bad)


# ---------------------------------------------------------------------------
# varying domains


def check_generalized_cont_convergence(member, domain, limit, domain0, probes, ks, eps_ladder=(1e-1, 1e-2, 1e-3)):
    """Continuous convergence for members with index-dependent domains.

    ``member(k, X)``, ``limit(X)`` evaluate on points ``(m, d)``;
    ``domain(k)`` and ``domain0`` are ``(lo, hi)`` boxes; ``probes`` is a
    list of ``(x0, seq)`` with ``seq(k)`` the k-th probe point.  Refuted if
    some probe keeps ``|f_k(x_k) - f0(x0)| >= eps`` for every ``k`` in ``ks``.
    """
    best = None
    lo0, hi0 = (np.atleast_1d(np.asarray(b, dtype=float)) for b in domain0)
    ks = [int(k) for k in ks]
    for x0, gen in probes:
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if np.any(x0 < lo0 - 1e-12) or np.any(x0 > hi0 + 1e-12):
            raise ProbeOutOfDomain(f"limit point {x0.tolist()} outside D_0")
        f0 = _col(limit(x0[None, :]))[0]
        S, gaps = [], []
        for k in ks:
            xk = np.atleast_1d(np.asarray(gen(k), dtype=float))
            lo, hi = (np.atleast_1d(np.asarray(b, dtype=float)) for b in domain(k))
            if np.any(xk < lo - 1e-12) or np.any(xk > hi + 1e-12):
                raise ProbeOutOfDomain(f"probe {xk.tolist()} outside D_{k}")
            S.append(xk)
            gaps.append(float(_rho(_col(member(k, xk[None, :]))[0], f0)))
        low = min(gaps)
        for eps in eps_ladder:
            if low >= eps:
                if best is None or (eps, low) > (best.eps, best.gap):
                    best = Witness("limit", list(map(float, x0)), _pairs(ks, S), eps, low)
                break
    info = {"eps_ladder": list(eps_ladder), "indices": [ks[0], ks[-1]], "n_probes": len(probes)}
    if best is None:
        return Verdict("generalized-continuous-convergence", CONSISTENT, None, info)
    return Verdict("generalized-continuous-convergence", REFUTED, best, info)


# ---------------------------------------------------------------------------
# sequences of right-hand sides over the (t, segment) tube


class RhsSeq:
    """``k -> f_k`` where each member is an :class:`~fdedep.rhs.Rhs`; ``member(0)`` is the limit."""

    def __init__(self, member, k_max, name="rhs-seq"):
        self.member = member
        self.k_max = int(k_max)
        self.name = name

    def refs(self):
        refs = set(self.member(0).refs)
        for k in (max(1, self.k_max // 2), self.k_max):
            refs |= set(self.member(k).refs)
        return tuple(sorted(refs))

    def as_box_seq(self, x0, radius, t_start, t_end, grid=5, res_k_max=None, member=None):
        """Reduce to a box sequence over ``(tau, x_i(tau - d) for each ref)``.

        An Rhs only reads the listed point values, so continuity and
        convergence on the tube reduce to the same notions on this box
        (max-abs metric).
        """
        refs = self.refs()
        tau = x0.times
        sel = (tau >= t_start - 1e-12) & (tau <= t_end + 1e-12)
        lo, hi = [t_start], [t_end]
        for i, d in refs:
            col = x0.eval(np.clip(tau[sel] - d, x0.t0, x0.t_end))[:, i - 1]
            lo.append(col.min() - radius)
            hi.append(col.max() + radius)
        member = member or self.member

        def ev(k, X):
            f = member(k)
            vals = {ref: X[:, j + 1] for j, ref in enumerate(refs)}
            return f.evaluate(X[:, 0], vals)

        return FnSeq(ev, lambda X: ev(0, X), list(zip(lo, hi)), grid=grid, name=self.name)


@dataclass
class UniformBound:
    M: float
    k0: int
    tube: Tube
    per_k: dict

    def as_dict(self):
        return {
            "M": self.M,
            "k0": self.k0,
            "radius": self.tube.radius,
            "t_start": self.tube.t_start,
            "t_end": self.tube.t_end,
            "per_k_max": {str(k): v for k, v in self.per_k.items()},
        }


def uniform_bound_on_tube(seq, x0, delta, a_prime, sample_density=8, safety=SAFETY):
    """Common bound ``M`` of ``|f_k|`` on the ``delta/2`` tube around the graph
    of ``x0`` over ``[sigma0, sigma0 + a_prime]``, for tail ``k`` and ``k = 0``.
    Times are also shifted by ``+-delta/2`` since the tube is open in both
    variables.

    ``k0`` is the first tail index from which the running maximum stays
    within 5% of its final value.
    """
    tube = Tube(x0, 0.5 * delta, x0.sigma, x0.sigma + a_prime)
    refs = seq.refs()
    P = perturbation_basis(refs, x0.r, tube.radius, sample_density)
    T, values = tube_points(refs, tube, P)
    tail = list(range(max(1, seq.k_max // 2), seq.k_max + 1))
    per_k = {}
    for k in [0] + tail:
        f = seq.member(k)
        try:
            F = [np.max(np.abs(f.evaluate(T + u, values)), initial=0.0) for u in (-tube.radius, 0.0, tube.radius)]
        except EvalError as exc:
            raise EvalError(f"f_{k} not evaluable on the tube: {exc}") from None
        per_k[k] = float(max(F))
    running = np.maximum.accumulate([per_k[k] for k in tail])
    final = running[-1]
    k0 = tail[int(np.argmax(running * 1.05 >= final))] if final > 0 else tail[0]
    M = safety * max(final, per_k[0])
    return UniformBound(M, k0, tube, per_k)


def max_on_random_tube(seq, tube, ks, n=10_000, seed=0):
    """Largest ``|f_k|`` over ``n`` fresh uniform tube samples, ``k`` in ``ks``."""
    rng = np.random.default_rng(seed)
    refs = seq.refs()
    tau, values = random_tube_points(refs, tube, n, rng)
    tau = tau + rng.uniform(-tube.radius, tube.radius, size=n)
    out = 0.0
    for k in ks:
        F = seq.member(k).evaluate(tau, values)
        out = max(out, float(np.max(np.abs(F))))
    return out
