"""Intrinsic curvature of a distribution and its relation to ambient curvature.

R^D(X1, X2) X3 uses the intrinsic connection and the projected bracket
[X1, X2]^D. Two independent routes are provided: the definition, evaluated
by differentiating the projected fields with order-2 jets, and the
decomposition through ambient curvature, the second fundamental form and
the bracket component normal to D.

Sectional curvatures are normalised so that round spheres are positive:
sec(X, Y) = K(X, Y, Y, X) / (g(X, X) g(Y, Y) - g(X, Y)^2). With the sign of
R used here, K(X, Y, X, Y) is the negative of that numerator.

Because only [X1, X2]^D enters, R^D is tensorial in X3 only when D is
involutive: R^D(X1, X2)(f X3) = f R^D(X1, X2) X3 + [X1, X2]^perp(f) X3.
Intrinsic values on a non-involutive D therefore depend on the fields, not
just on their values at p. The CLI always evaluates on the Gram-Schmidt frame.
"""

from dataclasses import dataclass

import numpy as np

from . import jet as J
from .dist import DistJets, DistributionModel
from .errors import DegeneratePlaneError, InputError
from .riemann import LocalJets, ManifoldModel, at_point

__all__ = [
    "GaussReport", "intrinsic_endo", "endo_decomposition", "intrinsic_K",
    "gauss_identity", "sectional", "sectional_from_gauss", "DEGENERATE_TOL",
]

DEGENERATE_TOL = 1e-12


def _val(x):
    return np.array(J.value_of(x), dtype=float)


def _f(x):
    return float(J.value_of(x))


def _ctx(dist, p, fields):
    ctx = DistJets(dist, p, 2)
    for i, X in enumerate(fields, 1):
        ctx.require_D(X, f"X{i}")
    return ctx


def _intrinsic(ctx, X1, X2, X3):
    a = ctx.covd_D(X1, ctx.covd_D(X2, X3))
    b = ctx.covd_D(X2, ctx.covd_D(X1, X3))
    c = ctx.covd_D(ctx.bracket_D(X1, X2), X3)
    return a - b - c


def _decomposed(ctx, X1, X2, X3):
    out = ctx.proj_D(ctx.riemann(X1, X2, X3))
    b23 = ctx.proj_perp(ctx.covd(X2, X3))
    b13 = ctx.proj_perp(ctx.covd(X1, X3))
    for z in ctx.Z:
        out = out - _f(ctx.inner(b23, z)) * _val(ctx.proj_D(ctx.covd(X1, z)))
        out = out + _f(ctx.inner(b13, z)) * _val(ctx.proj_D(ctx.covd(X2, z)))
    perp = ctx.proj_perp(ctx.bracket(X1, X2))
    return out + ctx.proj_D(ctx.covd(perp, X3))


def intrinsic_endo(dist, X1, X2, X3, p):
    """R^D(X1, X2) X3 from its definition."""
    ctx = _ctx(dist, p, (X1, X2, X3))
    with at_point(ctx.p):
        return _val(_intrinsic(ctx, X1, X2, X3))


def endo_decomposition(dist, X1, X2, X3, p):
    """R^D(X1, X2) X3 assembled from ambient curvature and B.

    pi^D R(X1,X2)X3 - sum_j B_Zj(X2,X3) pi^D(nabla_X1 Z_j)
    + sum_j B_Zj(X1,X3) pi^D(nabla_X2 Z_j) + pi^D(nabla_{[X1,X2]^perp} X3)
    """
    ctx = _ctx(dist, p, (X1, X2, X3))
    with at_point(ctx.p):
        return _val(_decomposed(ctx, X1, X2, X3))


def intrinsic_K(dist, X1, X2, X3, X4, p):
    ctx = _ctx(dist, p, (X1, X2, X3, X4))
    with at_point(ctx.p):
        return _f(ctx.inner(_intrinsic(ctx, X1, X2, X3), ctx.field(X4)))


@dataclass
class GaussReport:
    p: np.ndarray
    fields: tuple
    K_value: float
    KD_value: float
    sff_terms: tuple      # (g(B13, B24), g(B23, B14))
    correction: float
    residual: float

    def to_dict(self):
        return {"p": self.p.tolist(), "fields": list(self.fields),
                "K": self.K_value, "KD": self.KD_value,
                "g_B13_B24": self.sff_terms[0], "g_B23_B14": self.sff_terms[1],
                "correction": self.correction, "residual": self.residual}


def _gauss_terms(ctx, X1, X2, X3, X4):
    x4 = ctx.field(X4)
    K = _f(ctx.inner(ctx.riemann(X1, X2, X3), x4))
    KD = _f(ctx.inner(_intrinsic(ctx, X1, X2, X3), x4))

    def B(X, Y):
        return _val(ctx.proj_perp(ctx.covd(X, Y)))

    G = _val(ctx.metric)
    t1 = float(B(X1, X3) @ G @ B(X2, X4))
    t2 = float(B(X2, X3) @ G @ B(X1, X4))
    perp = ctx.proj_perp(ctx.bracket(X1, X2))
    corr = _f(ctx.inner(ctx.proj_D(ctx.covd(perp, X3)), x4))
    return K, KD, t1, t2, corr


def gauss_identity(dist, X1, X2, X3, X4, p, labels=None):
    """Every term of K^D = K - g(B13, B24) + g(B23, B14) + correction."""
    ctx = _ctx(dist, p, (X1, X2, X3, X4))
    with at_point(ctx.p):
        K, KD, t1, t2, corr = _gauss_terms(ctx, X1, X2, X3, X4)
    residual = abs(KD - (K - t1 + t2 + corr))
    labels = tuple(labels) if labels else ("X1", "X2", "X3", "X4")
    return GaussReport(ctx.p, labels, K, KD, (t1, t2), corr, residual)


def _plane(ctx, X, Y):
    x, y = ctx.field(X), ctx.field(Y)
    gxx, gyy, gxy = _f(ctx.inner(x, x)), _f(ctx.inner(y, y)), _f(ctx.inner(x, y))
    den = gxx * gyy - gxy * gxy
    if den <= DEGENERATE_TOL:
        raise DegeneratePlaneError(f"plane is degenerate (Gram determinant {den:.3g})", ctx.p)
    return x, y, den


def sectional(model, X, Y, p, which="ambient"):
    """Sectional curvature of span{X(p), Y(p)}.

    ``model`` is a ManifoldModel or a DistributionModel; ``which`` selects
    the ambient or the intrinsic curvature tensor.
    """
    if which not in ("ambient", "intrinsic"):
        raise InputError(f"unknown curvature kind {which!r}")
    if which == "intrinsic":
        if not isinstance(model, DistributionModel):
            raise InputError("intrinsic sectional curvature needs a distribution")
        ctx = _ctx(model, p, (X, Y))
    else:
        if isinstance(model, DistributionModel):
            ctx = DistJets(model, p, 2)
        elif isinstance(model, ManifoldModel):
            ctx = LocalJets(model, p, 2)
        else:
            raise InputError("expected a manifold or distribution model")
    with at_point(ctx.p):
        x, y, den = _plane(ctx, X, Y)
        r = _intrinsic(ctx, X, Y, Y) if which == "intrinsic" else ctx.riemann(X, Y, Y)
        return _f(ctx.inner(r, x)) / den


def sectional_from_gauss(dist, X, Y, p):
    """Intrinsic sectional curvature rebuilt from the ambient one, B and the
    normal bracket, without touching R^D."""
    ctx = _ctx(dist, p, (X, Y))
    with at_point(ctx.p):
        x, y, den = _plane(ctx, X, Y)
        K = _f(ctx.inner(ctx.riemann(X, Y, Y), x))
        bxy = _val(ctx.proj_perp(ctx.covd(X, Y)))
        byx = _val(ctx.proj_perp(ctx.covd(Y, X)))
        bxx = _val(ctx.proj_perp(ctx.covd(X, X)))
        byy = _val(ctx.proj_perp(ctx.covd(Y, Y)))
        G = _val(ctx.metric)
        perp = ctx.proj_perp(ctx.bracket(X, Y))
        corr = _f(ctx.inner(ctx.covd(perp, Y), x))
        return (K - float(bxy @ G @ byx) + float(byy @ G @ bxx) + corr) / den
