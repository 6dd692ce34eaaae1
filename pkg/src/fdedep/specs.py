"""JSON documents describing problems, families, Fourier runs and sequences.

Every loader raises :class:`InputError` carrying ``path:line:col`` context,
where the position points into the JSON file (for expression errors, at the
offending character of the expression string when it can be located).
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from . import expr as E
from .convergence import FnSeq
from .dependence import FamilySpec
from .errors import FdeError, ParseError
from .fourier import QUAD_POINTS, fourier_coeffs
from .grid import HistorySegment, snap
from .rhs import autonomous, parse_rhs
from .solver import ProblemSpec

__all__ = [
    "Document",
    "ExprSeq",
    "InputError",
    "family_from",
    "fourier_from",
    "load",
    "problem_from",
    "seq_from",
]


class InputError(FdeError):
    def __init__(self, path, message, line=None, column=None):
        self.path = str(path)
        self.line = line
        self.column = column
        where = self.path if line is None else f"{self.path}:{line}:{column}"
        super().__init__(f"{where}: {message}")


class Document:
    """A parsed JSON object that can locate its keys in the source text."""

    def __init__(self, path, text, data, prefix=""):
        self.path = path
        self.text = text
        self.data = data
        self.prefix = prefix

    def sub(self, key):
        return Document(self.path, self.text, self.data[key], f"{self.prefix}{key}.")

    def __contains__(self, key):
        return key in self.data

    def position(self, key):
        m = re.search(rf'"{re.escape(key)}"\s*:\s*"?', self.text)
        if not m:
            return None, None
        off = m.end()
        line = self.text.count("\n", 0, off) + 1
        col = off - (self.text.rfind("\n", 0, off) + 1) + 1
        return line, col

    def error(self, key, message, exc=None):
        line, col = self.position(key) if key is not None else (None, None)
        if isinstance(exc, ParseError) and line is not None and exc.line == 1:
            col += exc.column - 1
            message = exc.message
        return InputError(self.path, f"{self.prefix}{key}: {message}" if key else message, line, col)

    def get(self, key, default=None, kind=None, required=False):
        if key not in self.data:
            if required:
                raise self.error(None, f"missing required field '{self.prefix}{key}'")
            return default
        v = self.data[key]
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise self.error(key, f"expected a number, got {v!r}")
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise self.error(key, f"expected an integer, got {v!r}")
            return v
        return v


def load(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(path, f"cannot read input: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(path, exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise InputError(path, "top-level JSON value must be an object", 1, 1)
    return Document(path, text, data)


def _phi(doc, key, r, h, N):
    spec = doc.get(key, required=True)
    n = snap(r, h) + 1
    theta = -h * np.arange(n - 1, -1, -1)
    if isinstance(spec, dict) and "nodes" in spec:
        nodes = np.asarray(spec["nodes"], dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != N + 1 or nodes.shape[0] < 1:
            raise doc.error(key, f"nodes must be rows [theta, x1..x{N}]")
        order = np.argsort(nodes[:, 0])
        nodes = nodes[order]
        if nodes[0, 0] > theta[0] + 1e-9 or nodes[-1, 0] < -1e-9:
            raise doc.error(key, f"nodes must cover [-r, 0] = [{-r}, 0]")
        vals = np.stack([np.interp(theta, nodes[:, 0], nodes[:, j + 1]) for j in range(N)], axis=1)
        return HistorySegment.from_values(vals, h)
    sources = spec if isinstance(spec, list) else [spec]
    if len(sources) != N or not all(isinstance(s, (str, int, float)) for s in sources):
        raise doc.error(key, f"expected {N} expression(s) in theta")
    cols = []
    for s in sources:
        try:
            fn = E.compile_scalar(str(s), variables=("theta",))
            cols.append(np.broadcast_to(fn(theta), theta.shape))
        except FdeError as exc:
            raise doc.error(key, str(exc), exc) from None
    return HistorySegment.from_values(np.stack(cols, axis=1), h)


def _rhs(doc, key, N, r, params):
    src = doc.get(key, required=True)
    if isinstance(src, (int, float)):
        src = str(src)
    try:
        return parse_rhs(src, N=N, r=r, params=params)
    except FdeError as exc:
        raise doc.error(key, str(exc), exc) from None


def problem_from(doc, h=None, rhs_override=None):
    """ProblemSpec from a ``problem`` document; ``h`` overrides the file."""
    N = doc.get("dim", 1, int)
    r = doc.get("r", 0.0, float)
    sigma = doc.get("sigma", 0.0, float)
    horizon = doc.get("horizon", required=True, kind=float)
    h = doc.get("h", 1e-3, float) if h is None else h
    params = doc.get("params", {}) or {}
    if not isinstance(params, dict) or not all(isinstance(v, (int, float)) for v in params.values()):
        raise doc.error("params", "params must map names to numbers")
    if N < 1 or r < 0 or horizon <= 0 or h <= 0:
        raise doc.error(None, "need dim >= 1, r >= 0, horizon > 0 and h > 0")
    f = rhs_override if rhs_override is not None else _rhs(doc, "rhs", N, r, params)
    phi = _phi(doc, "phi", r, h, N)
    try:
        return ProblemSpec(sigma, r, phi, f, horizon, h)
    except (FdeError, ValueError) as exc:
        raise doc.error(None, str(exc)) from None


def family_from(doc, h=None):
    """FamilySpec and run options from a ``family`` document."""
    base_doc = doc.sub("base") if isinstance(doc.get("base", required=True), dict) else None
    if base_doc is None:
        ref = Path(doc.path).parent / doc.get("base")
        base_doc = load(ref)
    fourier = None
    rhs_override = None
    if "fourier" in doc:
        fd = doc.sub("fourier")
        f = _scalar(fd, "f", ("x",))
        q = fd.get("quad_points", QUAD_POINTS, int)
        K = doc.get("K", required=True, kind=int)
        fourier = fourier_coeffs(f, K, q)
        rhs_override = autonomous(f, name=str(fd.get("f")))
    base = problem_from(base_doc, h=h, rhs_override=rhs_override)
    N, r = base.dim, base.r
    params = base_doc.get("params", {}) or {}
    rhs_drift = _rhs(doc, "rhs_drift", N, r, params) if "rhs_drift" in doc else None
    phi_drift = _phi(doc, "phi_drift", r, base.h, N) if "phi_drift" in doc else None
    eps = doc.get("eps_ladder")
    if eps is not None and (not isinstance(eps, list) or not eps or not all(isinstance(e, (int, float)) for e in eps)):
        raise doc.error("eps_ladder", "expected a non-empty list of numbers")
    try:
        spec = FamilySpec(
            base=base,
            K=doc.get("K", required=True, kind=int),
            a_prime=doc.get("a_prime", required=True, kind=float),
            rhs_drift=rhs_drift,
            phi_drift=phi_drift,
            sigma_drift=doc.get("sigma_drift", 0.0, float),
            c=str(doc.get("c", "1/k")),
            fourier=fourier,
            tail_start=doc.get("tail_start", None, int),
            delta=doc.get("delta", 1.0, float),
        )
    except FdeError as exc:
        raise doc.error("c", str(exc), exc) from None
    except ValueError as exc:
        raise doc.error(None, str(exc)) from None
    return spec, (tuple(sorted(map(float, eps), reverse=True)) if eps else None)


def _scalar(doc, key, variables):
    src = doc.get(key, required=True)
    try:
        return E.compile_scalar(str(src), variables=variables)
    except FdeError as exc:
        raise doc.error(key, str(exc), exc) from None


def fourier_from(doc, h=None):
    f = _scalar(doc, "f", ("x",))
    orders = doc.get("orders", required=True)
    if not isinstance(orders, list) or not orders or not all(isinstance(n, int) and n >= 0 for n in orders):
        raise doc.error("orders", "expected a non-empty list of non-negative integers")
    opts = {
        "c0": doc.get("c0", required=True, kind=float),
        "horizon": doc.get("horizon", required=True, kind=float),
        "orders": orders,
        "h": doc.get("h", 1e-3, float) if h is None else h,
        "quad_points": doc.get("quad_points", QUAD_POINTS, int),
    }
    if opts["horizon"] <= 0 or opts["h"] <= 0:
        raise doc.error(None, "need horizon > 0 and h > 0")
    return f, opts


class ExprSeq(FnSeq):
    """Sequence given by an expression in the box variables and the index (``n`` or ``k``)."""

    def __init__(self, expr, limit, box, variables, grid=201, members_continuous=True):
        self.fn = expr
        super().__init__(
            lambda k, X: expr(*X.T, float(k), float(k)),
            lambda X: np.broadcast_to(limit(*X.T), X.shape[:1]).astype(float),
            box,
            grid=grid,
            name=expr.source,
            members_continuous=members_continuous,
        )

    def values(self, ks, X):
        n = np.asarray(ks, dtype=float)[:, None]
        cols = [x[None, :] for x in X.T]
        return np.broadcast_to(self.fn(*cols, n, n), (n.shape[0], X.shape[0]))[..., None]


def seq_from(doc):
    box = doc.get("box", required=True)
    try:
        box = [(float(lo), float(hi)) for lo, hi in box]
    except (TypeError, ValueError):
        raise doc.error("box", "expected a list of [lo, hi] pairs") from None
    if not box or any(hi < lo for lo, hi in box):
        raise doc.error("box", "expected a non-empty list of [lo, hi] pairs with lo <= hi")
    d = len(box)
    default_vars = ["x"] if d == 1 else [f"x{i + 1}" for i in range(d)]
    variables = tuple(doc.get("variables", default_vars))
    if len(variables) != d:
        raise doc.error("variables", f"expected {d} variable names")
    expr = _scalar(doc, "expr", variables + ("n", "k"))
    limit = _scalar(doc, "limit", variables)
    grid = doc.get("grid", 201 if d == 1 else 9, int)
    return ExprSeq(expr, limit, box, variables, grid, bool(doc.get("members_continuous", True)))
