"""Ambient Riemannian geometry of a single-chart manifold (M, g).

Every quantity is evaluated at a point through :class:`LocalJets`, which seeds
the chart coordinates as jets of a fixed order. Each covariant derivative
consumes one order, so order-2 seeding is enough for the curvature
endomorphism: it is assembled by differentiating the covariant-derivative
pipeline itself, never from coordinate formulas for derivatives of the
Christoffel symbols.
"""

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import jet as J
from .errors import (DistGeoError, EvalDomainError, InputError, NotSPDError,
                     NumericError)
from .expr import Binary, Expr, max_index, parse, to_text

__all__ = [
    "ManifoldModel", "VectorFieldModel", "LocalJets", "euclidean",
    "metric_at", "christoffel_at", "cov_deriv", "lie_bracket", "riemann_endo",
    "curvature_tensor_K", "flat_map", "sharp_map", "inner", "ScaledField",
    "SumField", "ConstantField",
]


@contextmanager
def at_point(p):
    """Attach the evaluation point to numeric errors raised inside."""
    try:
        yield
    except NumericError as exc:
        if exc.point is None:
            if isinstance(exc, EvalDomainError):
                raise EvalDomainError(str(exc), None, p) from exc
            raise type(exc)(str(exc), p) from exc
        raise


@dataclass(frozen=True)
class VectorFieldModel:
    """A vector field given by one expression per chart coordinate."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for c in self.components:
            if not isinstance(c, Expr):
                raise InputError(f"vector field component is not an Expr: {c!r}")

    @classmethod
    def from_text(cls, texts, chart):
        chart = list(chart)
        if len(texts) != len(chart):
            raise InputError(
                f"vector field has {len(texts)} components on a {len(chart)}-dimensional chart")
        return cls(tuple(parse(t, chart) for t in texts))

    @property
    def dim(self):
        return len(self.components)

    def texts(self):
        return [to_text(c) for c in self.components]

    def scaled(self, f):
        """The field ``f * self`` for a scalar expression ``f``."""
        return VectorFieldModel(tuple(Binary("*", f, c) for c in self.components))

    def __add__(self, other):
        return VectorFieldModel(tuple(Binary("+", a, b)
                                      for a, b in zip(self.components, other.components)))

    def jet(self, ctx):
        return J.stack([c.eval(ctx.q) for c in self.components])


@dataclass(frozen=True)
class ManifoldModel:
    """Chart names and metric entry expressions ``g[i][j]``."""

    chart: tuple
    metric: tuple

    def __post_init__(self):
        object.__setattr__(self, "chart", tuple(self.chart))
        object.__setattr__(self, "metric", tuple(tuple(row) for row in self.metric))
        m = len(self.chart)
        if len(self.metric) != m or any(len(row) != m for row in self.metric):
            raise InputError(f"metric must be a {m}x{m} grid of expressions")
        for i in range(m):
            for j in range(m):
                e = self.metric[i][j]
                if not isinstance(e, Expr):
                    raise InputError(f"metric entry g[{i}][{j}] is not an Expr")
                if max_index(e) >= m:
                    raise InputError(f"metric entry g[{i}][{j}] references a coordinate out of range")
                if j > i and self.metric[i][j] != self.metric[j][i]:
                    raise InputError(f"metric is not symmetric: g[{i}][{j}] != g[{j}][{i}]")

    @classmethod
    def from_text(cls, chart, metric):
        chart = list(chart)
        return cls(tuple(chart), tuple(tuple(parse(t, chart) for t in row) for row in metric))

    @property
    def m(self):
        return len(self.chart)

    def field(self, texts):
        return VectorFieldModel.from_text(texts, self.chart)

    def metric_texts(self):
        return [[to_text(e) for e in row] for row in self.metric]


@dataclass(frozen=True)
class ScaledField:
    """``f * X`` for a scalar Expr ``f`` and any field ``X``."""

    f: Expr
    X: object

    def jet(self, ctx):
        return self.f.eval(ctx.q) * ctx.field(self.X)


@dataclass(frozen=True)
class SumField:
    X: object
    Y: object

    def jet(self, ctx):
        return ctx.field(self.X) + ctx.field(self.Y)


@dataclass(frozen=True)
class ConstantField:
    """A field with constant chart components."""

    components: tuple

    def jet(self, ctx):
        return np.asarray(self.components, dtype=float)


def euclidean(chart):
    chart = list(chart)
    m = len(chart)
    return ManifoldModel.from_text(chart, [["1" if i == j else "0" for j in range(m)]
                                           for i in range(m)])


class LocalJets:
    """Jets of model quantities around one point ``p``.

    ``order`` is the number of derivatives available on the input fields.
    Coordinates are seeded along the chart axes, so ``grad`` of any jet is
    its coordinate gradient.
    """

    def __init__(self, model, p, order):
        p = np.asarray(p, dtype=float)
        if p.shape != (model.m,):
            raise InputError(f"point must have {model.m} coordinates, got {p.shape}")
        self.model = model
        self.p = p
        self.order = order
        self.q = J.seed(p, order)
        self._cache = {}
        self._G = None
        self._Gamma = None

    # -- evaluation ---------------------------------------------------------
    def field(self, X):
        """Jet of a field (anything exposing ``jet(ctx)``) or a constant vector."""
        if isinstance(X, (J.Jet, np.ndarray)):
            return X
        key = id(X)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is X:
            return hit[1]
        with at_point(self.p):
            value = self.promote(X.jet(self))
        self._cache[key] = (X, value)
        return value

    def promote(self, x):
        """Constants become jets of the context order with zero derivatives."""
        if isinstance(x, J.Jet):
            return x
        x = np.asarray(x, dtype=float)
        if self.order == 0:
            return J.Jet(x)
        k = self.model.m
        return J.Jet(x, np.zeros(x.shape + (k,)),
                     np.zeros(x.shape + (k, k)) if self.order > 1 else None)

    @property
    def metric(self):
        if self._G is None:
            with at_point(self.p):
                g = J.stack([J.stack([e.eval(self.q) for e in row])
                             for row in self.model.metric])
                g = self.promote(g)
                try:
                    np.linalg.cholesky(g.value)
                except np.linalg.LinAlgError as exc:
                    raise NotSPDError("metric is not positive definite", self.p) from exc
            self._G = g
        return self._G

    @property
    def christoffel(self):
        """Gamma[k, i, j] as a jet of order ``order - 1``."""
        if self._Gamma is None:
            if self.order < 1:
                raise DistGeoError("Christoffel symbols need at least order-1 jets")
            G = self.metric
            D = J.grad(G)  # D[a, b, c] = d_c g_ab
            T = (D.transpose(1, 2, 0) + D.transpose(1, 0, 2) - D.transpose(2, 0, 1)) * 0.5
            m = self.model.m
            with at_point(self.p):
                self._Gamma = J.solve_spd(G, T.reshape(m, m * m)).reshape(m, m, m)
        return self._Gamma

    # -- tensor algebra -----------------------------------------------------
    def inner(self, u, v):
        return J.einsum2("i,i->", J.einsum2("ij,j->i", self.metric, v), u)

    def norm(self, v):
        return J.sqrt(self.inner(v, v))

    def directional(self, f, X):
        """Derivative of the jet ``f`` along the vector jet ``X``."""
        return J.einsum2("...i,i->...", J.grad(f), X)

    def covd(self, X, Y):
        X = self.field(X)
        Y = self.field(Y)
        G = self.christoffel
        first = self.directional(Y, X)
        return first + J.einsum2("kj,j->k", J.einsum2("kij,i->kj", G, X), Y)

    def bracket(self, X, Y):
        X = self.field(X)
        Y = self.field(Y)
        return self.directional(Y, X) - self.directional(X, Y)

    def riemann(self, X1, X2, X3):
        """R(X1, X2) X3 = nabla_1 nabla_2 X3 - nabla_2 nabla_1 X3 - nabla_[1,2] X3."""
        a = self.covd(X1, self.covd(X2, X3))
        b = self.covd(X2, self.covd(X1, X3))
        c = self.covd(self.bracket(X1, X2), X3)
        return a - b - c


def _val(x):
    return np.array(J.value_of(x), dtype=float)


def metric_at(mod, p):
    """Metric matrix G(p); raises :class:`NotSPDError` if not positive definite."""
    return _val(LocalJets(mod, p, 0).metric)


def christoffel_at(mod, p):
    """Christoffel symbols ``Gamma[k, i, j]`` of the Levi-Civita connection."""
    return _val(LocalJets(mod, p, 1).christoffel)


def cov_deriv(mod, X, Y, p):
    """(nabla_X Y)(p)."""
    return _val(LocalJets(mod, p, 1).covd(X, Y))


def lie_bracket(X, Y, p):
    """[X, Y](p) = X(Y) - Y(X) in coordinates; needs no metric."""
    p = np.asarray(p, dtype=float)
    ctx = _Bare(p)
    with at_point(p):
        xj = ctx.field(X)
        yj = ctx.field(Y)
    dy = J.einsum2("ki,i->k", J.grad(yj), xj)
    dx = J.einsum2("ki,i->k", J.grad(xj), yj)
    return _val(dy - dx)


class _Bare:
    """Coordinate jets without a metric, enough to evaluate plain fields."""

    def __init__(self, p):
        self.q = J.seed(p, 1)
        self.m = len(p)

    def field(self, X):
        v = X.jet(self)
        if isinstance(v, J.Jet):
            return v
        v = np.asarray(v, dtype=float)
        return J.Jet(v, np.zeros(v.shape + (self.m,)))


def riemann_endo(mod, X1, X2, X3, p):
    """R(X1, X2) X3 at p, via order-2 jets through the covariant derivative."""
    return _val(LocalJets(mod, p, 2).riemann(X1, X2, X3))


def curvature_tensor_K(mod, X1, X2, X3, X4, p):
    ctx = LocalJets(mod, p, 2)
    r = ctx.riemann(X1, X2, X3)
    return float(J.value_of(ctx.inner(r, ctx.field(X4))))


def inner(mod, p, u, v):
    return float(np.asarray(u) @ metric_at(mod, p) @ np.asarray(v))


def flat_map(mod, p, v):
    """Lower an index: the covector G(p) v."""
    return metric_at(mod, p) @ np.asarray(v, dtype=float)


def sharp_map(mod, p, alpha):
    """Raise an index: the vector G(p)^-1 alpha, by Cholesky solve."""
    with at_point(p):
        return np.asarray(J.solve_spd(metric_at(mod, p), np.asarray(alpha, dtype=float)))
