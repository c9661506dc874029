"""Invariant battery: every identity the engine relies on, at sampled points."""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import jet as J
from .curvature import _decomposed, _gauss_terms, _intrinsic
from .dist import DistJets
from .errors import InputError
from .riemann import ConstantField, LocalJets
from .sff import (_B, _d_flat, _lie_g, involutivity_residuals, sobol_points,
                  totally_geodesic_residuals)

__all__ = ["Check", "run_battery"]


@dataclass
class Check:
    name: str
    max_residual: float
    tol: float

    @property
    def passed(self):
        return self.max_residual < self.tol

    def to_dict(self):
        return {"name": self.name, "max_residual": self.max_residual, "tol": self.tol,
                "passed": self.passed}


def _v(x):
    return np.asarray(J.value_of(x), dtype=float)


def _f(x):
    return float(J.value_of(x))


class _Max:
    def __init__(self):
        self.values = {}
        self.tols = {}

    def add(self, name, r, tol):
        self.values[name] = max(self.values.get(name, 0.0), float(r))
        self.tols[name] = tol

    def checks(self):
        return [Check(k, self.values[k], self.tols[k]) for k in self.values]


def _ambient(acc, mod, p, tol):
    m = mod.m
    ctx = LocalJets(mod, p, 2)
    coords = [ConstantField(tuple(np.eye(m)[i])) for i in range(m)]
    Gam = _v(ctx.christoffel)
    acc.add("christoffel_symmetry", np.max(np.abs(Gam - Gam.transpose(0, 2, 1))), 1e-12)
    G = ctx.metric
    dG = _v(J.grad(G))
    compat = dG - (np.einsum("lki,lj->ijk", Gam, _v(G)) + np.einsum("lkj,il->ijk", Gam, _v(G)))
    acc.add("metric_compatibility", np.max(np.abs(compat)), tol)
    # non-constant fields exercise the derivative terms
    q = ctx.q
    fields = [J.stack([q[(i + k) % m] * q[(i + 2 * k + 1) % m] for k in range(m)])
              for i in range(2)]
    for X, Y in product(fields, fields):
        t = ctx.covd(X, Y) - ctx.covd(Y, X) - ctx.bracket(X, Y)
        acc.add("torsion_free", np.max(np.abs(_v(t))), tol)
    X, Y, Z = fields[0], fields[1], coords[0]
    lhs = ctx.directional(ctx.inner(Y, ctx.field(Z)), X)
    rhs = ctx.inner(ctx.covd(X, Y), ctx.field(Z)) + ctx.inner(Y, ctx.covd(X, Z))
    acc.add("metric_compatibility", abs(_f(lhs) - _f(rhs)), tol)
    a, b, c = coords[0], coords[1 % m], coords[2 % m] if m > 2 else coords[0]
    bianchi = ctx.riemann(a, b, c) + ctx.riemann(b, c, a) + ctx.riemann(c, a, b)
    acc.add("first_bianchi", np.max(np.abs(_v(bianchi))), tol)


def _distribution(acc, dist, p, tol, rng):
    ctx = DistJets(dist, p, 2)
    E, Z = ctx.E, ctx.Z
    frame = E + Z
    gram = np.array([[_f(ctx.inner(u, w)) for w in frame] for u in frame])
    acc.add("frame_orthonormality", np.max(np.abs(gram - np.eye(len(frame)))), 1e-10)
    w = rng.normal(size=dist.m)
    G = _v(ctx.metric)
    pd, pp = _v(ctx.proj_D(w)), _v(ctx.proj_perp(w))
    acc.add("projection_orthogonality", abs(pd @ G @ pp), 1e-10)
    acc.add("projection_idempotent", np.max(np.abs(_v(ctx.proj_D(pd)) - pd)), 1e-10)
    n = dist.n
    for a, b in product(range(n), range(n)):
        X, Y = E[a], E[b]
        cd = _v(ctx.covd_D(X, Y))
        acc.add("koszul_equals_projection", np.max(np.abs(cd - _v(ctx.koszul(X, Y)))), tol)
        tors = cd - _v(ctx.covd_D(Y, X)) - _v(ctx.bracket(X, Y))
        acc.add("torsion_identity",
                np.max(np.abs(tors + _v(ctx.proj_perp(ctx.bracket(X, Y))))), tol)
        gauss = _v(ctx.covd(X, Y)) - cd - _v(_B(ctx, X, Y))
        acc.add("gauss_formula", np.max(np.abs(gauss)), 1e-10)
        for z in Z:
            s1 = _f(ctx.inner(_B(ctx, X, Y), z))
            s2 = _f(ctx.inner(ctx.covd(X, Y), z))
            s3 = -_f(ctx.inner(ctx.covd(X, z), Y))
            acc.add("shape_operator_forms", max(abs(s1 - s2), abs(s1 - s3)), 1e-9)
            s_yx = _f(ctx.inner(_B(ctx, Y, X), z))
            acc.add("symskew_lie", abs((s1 + s_yx) + _f(_lie_g(ctx, z, X, Y))), tol)
            acc.add("symskew_exterior", abs((s1 - s_yx) + _f(_d_flat(ctx, z, X, Y))), tol)
        for c in range(n):
            X3 = E[c]
            r1 = _v(_intrinsic(ctx, X, Y, X3))
            r2 = _v(_decomposed(ctx, X, Y, X3))
            acc.add("curvature_dual_path", np.max(np.abs(r1 - r2)), 1e-7)
            for d in range(n):
                K, KD, t1, t2, corr = _gauss_terms(ctx, X, Y, X3, E[d])
                acc.add("gauss_identity", abs(KD - (K - t1 + t2 + corr)), 1e-7)
    inv = involutivity_residuals(ctx)
    tg = totally_geodesic_residuals(ctx)
    return inv, tg


def run_battery(scenario, samples=16, seed=None):
    """Evaluate every invariant at ``samples`` Sobol points of the scenario box.

    Numeric failures (a non-SPD metric, a rank drop) propagate with the
    offending point.
    """
    if scenario.box is None:
        raise InputError("verification needs a [sampling] box")
    seed = scenario.seed if seed is None else seed
    tol = scenario.tol("identity")
    ctol = scenario.tol("classify")
    acc = _Max()
    inv_votes, tg_votes = set(), set()
    rng = np.random.default_rng(seed)
    for p in sobol_points(scenario.box, samples, seed):
        _ambient(acc, scenario.manifold, p, tol)
        if scenario.distribution is not None:
            inv, tg = _distribution(acc, scenario.distribution, p, tol, rng)
            inv_votes.add(tuple(r < ctol for r, _ in inv.values()))
            tg_votes.add(tuple(r < ctol for r, _ in tg.values()))
    checks = acc.checks()
    if scenario.distribution is not None:
        # per point, the classification criteria must agree with each other
        def disagreement(votes):
            return 0.0 if all(len(set(v)) == 1 for v in votes) else math.inf
        checks.append(Check("frobenius_criteria_agree", disagreement(inv_votes), 1.0))
        checks.append(Check("total_geodesy_criteria_agree", disagreement(tg_votes), 1.0))
    return checks
