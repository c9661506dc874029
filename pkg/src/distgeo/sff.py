"""Second fundamental form of a distribution and the classifiers built on it.

B(X, Y) = pi^perp(nabla_X Y) for sections X, Y of D. Its symmetric part
decides total geodesy and its skew part decides involutivity; the two are
independent, which the classifiers report separately.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import jet as J
from .dist import DistJets, DistributionModel
from .errors import InputError, NotASectionError, NumericError
from .riemann import LocalJets, at_point

__all__ = [
    "SffValue", "ClassificationReport", "sff", "shape_operator",
    "bz_decomposition", "dual_shape", "weingarten", "symmetric_product",
    "is_involutive", "is_totally_geodesic", "hypersurface_form",
    "HypersurfaceForm", "sobol_points", "jacobi_eigh", "sign_gauge",
]


def _val(x):
    return np.array(J.value_of(x), dtype=float)


def _gnorm(ctx, v):
    v = _val(v)
    G = _val(ctx.metric)
    return float(math.sqrt(max(v @ G @ v, 0.0)))


@dataclass(frozen=True)
class SffValue:
    p: np.ndarray
    value: np.ndarray
    sym: np.ndarray
    skew: np.ndarray

    def to_dict(self):
        return {"p": self.p.tolist(), "value": self.value.tolist(),
                "sym": self.sym.tolist(), "skew": self.skew.tolist()}


@dataclass
class ClassificationReport:
    property: str
    verdict: str            # "holds", "fails" or "inconclusive"
    max_residual: float
    samples: int
    tol: float
    witness: dict = None
    criteria: dict = field(default_factory=dict)
    skipped: int = 0

    @property
    def holds(self):
        return self.verdict == "holds"

    def to_dict(self):
        return {"property": self.property, "verdict": self.verdict,
                "max_residual": self.max_residual, "witness": self.witness,
                "samples": self.samples, "tol": self.tol,
                "criteria": self.criteria, "skipped": self.skipped}


# -- pointwise forms ----------------------------------------------------------

def _B(ctx, X, Y):
    return ctx.proj_perp(ctx.covd(X, Y))


def sff(dist, X, Y, p):
    """B(X, Y) at p together with its symmetric and skew parts."""
    ctx = DistJets(dist, p, 1)
    ctx.require_D(X, "X")
    ctx.require_D(Y, "Y")
    bxy = _val(_B(ctx, X, Y))
    byx = _val(_B(ctx, Y, X))
    return SffValue(ctx.p, bxy, 0.5 * (bxy + byx), 0.5 * (bxy - byx))


def _S(ctx, X, Y, Z):
    return float(J.value_of(ctx.inner(_B(ctx, X, Y), ctx.field(Z))))


def shape_operator(dist, X, Y, Z, p, debug=False):
    """S(X, Y, Z) = g(B(X, Y), Z).

    Only the value of ``Z`` at p matters. With ``debug`` the forms
    g(nabla_X Y, Z) and -g(nabla_X Z, Y) are evaluated as well, which needs
    ``Z`` to be a section of the orthogonal complement near p.
    """
    ctx = DistJets(dist, p, 1)
    ctx.require_D(X, "X")
    ctx.require_D(Y, "Y")
    ctx.require_perp(Z, "Z", derivatives=debug)
    s = _S(ctx, X, Y, Z)
    if debug:
        s2 = float(J.value_of(ctx.inner(ctx.covd(X, Y), ctx.field(Z))))
        s3 = -float(J.value_of(ctx.inner(ctx.covd(X, Z), ctx.field(Y))))
        if max(abs(s - s2), abs(s - s3)) > 1e-9:
            raise NumericError(f"shape operator forms disagree: {s}, {s2}, {s3}", ctx.p)
    return s


def _lie_g(ctx, Z, X, Y):
    """(L_Z g)(X, Y) = Z(g(X, Y)) - g([Z, X], Y) - g(X, [Z, Y])."""
    X, Y, Z = ctx.field(X), ctx.field(Y), ctx.field(Z)
    return (ctx.directional(ctx.inner(X, Y), Z)
            - ctx.inner(ctx.bracket(Z, X), Y) - ctx.inner(X, ctx.bracket(Z, Y)))


def _d_flat(ctx, Z, X, Y):
    """d(i_Z g)(X, Y) = X(g(Z, Y)) - Y(g(Z, X)) - g(Z, [X, Y])."""
    X, Y, Z = ctx.field(X), ctx.field(Y), ctx.field(Z)
    return (ctx.directional(ctx.inner(Z, Y), X) - ctx.directional(ctx.inner(Z, X), Y)
            - ctx.inner(Z, ctx.bracket(X, Y)))


def bz_decomposition(dist, Z, X, Y, p):
    """(sym, skew, lie_check, ext_check) for B_Z(X, Y) = S(X, Y, Z).

    sym and skew come from symmetrising the shape operator; the checks are
    -1/2 (L_Z g)(X, Y) and -1/2 d(i_Z g)(X, Y) computed without it.
    """
    ctx = DistJets(dist, p, 1)
    ctx.require_D(X, "X")
    ctx.require_D(Y, "Y")
    ctx.require_perp(Z, "Z")
    sxy = _S(ctx, X, Y, Z)
    syx = _S(ctx, Y, X, Z)
    lie = -0.5 * float(J.value_of(_lie_g(ctx, Z, X, Y)))
    ext = -0.5 * float(J.value_of(_d_flat(ctx, Z, X, Y)))
    return 0.5 * (sxy + syx), 0.5 * (sxy - syx), lie, ext


def dual_shape(dist, X, Y, alpha, p, tol=1e-8):
    """S*(X, Y, alpha) = alpha(nabla_X Y) for a covector alpha annihilating D_p."""
    ctx = DistJets(dist, p, 1)
    ctx.require_D(X, "X")
    ctx.require_D(Y, "Y")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (dist.m,):
        raise InputError(f"covector must have {dist.m} components")
    leak = max((abs(float(alpha @ _val(e))) for e in ctx.E), default=0.0)
    if leak > tol:
        raise NotASectionError(f"covector does not annihilate D (residual {leak:.3g})", ctx.p)
    return float(alpha @ _val(ctx.covd(X, Y)))


def weingarten(dist, Z, X, p):
    """W_Z(X) = -nabla_X Z."""
    ctx = DistJets(dist, p, 1)
    ctx.require_D(X, "X")
    ctx.require_perp(Z, "Z")
    return -_val(ctx.covd(X, Z))


def symmetric_product(mod, X, Y, p):
    """nabla_X Y + nabla_Y X; ``mod`` is a manifold or a distribution."""
    base = mod.base if isinstance(mod, DistributionModel) else mod
    ctx = LocalJets(base, p, 1)
    with at_point(ctx.p):
        return _val(ctx.covd(X, Y)) + _val(ctx.covd(Y, X))


# -- classification -----------------------------------------------------------

def sobol_points(box, n=64, seed=0):
    """``n`` scrambled Sobol points in the box ``[[lo, hi], ...]``."""
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or np.any(box[:, 1] <= box[:, 0]):
        raise InputError("sampling box must be a list of [lo, hi] with lo < hi")
    sampler = qmc.Sobol(d=len(box), scramble=True, seed=seed)
    u = sampler.random(n)
    return qmc.scale(u, box[:, 0], box[:, 1])


def _threads():
    try:
        return max(1, int(os.environ.get("DISTGEO_THREADS", "1")))
    except ValueError:
        return 1


def _map_points(fn, points):
    """Apply ``fn`` to every point; failures are returned, not raised."""
    def safe(p):
        try:
            return fn(np.asarray(p, dtype=float))
        except NumericError as exc:
            return exc

    points = list(points)
    n = _threads()
    if n == 1 or len(points) < 2:
        return [safe(p) for p in points]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(safe, points))


def _pairs(n, diagonal):
    return [(a, b) for a in range(n) for b in range(a if diagonal else a + 1, n)]


def _classify(name, dist, points, tol, measure):
    """Reduce per-point criterion residuals into a report.

    ``measure(ctx)`` returns {criterion: (residual, fields)}; the first
    criterion is the primary one.
    """
    results = _map_points(lambda p: (p, measure(DistJets(dist, p, 1))), points)
    good = [r for r in results if not isinstance(r, Exception)]
    if not good:
        raise NumericError(f"{name}: no valid sample points ({len(results)} tried)")
    criteria = {}
    for p, res in good:
        for key, (r, fields) in res.items():
            best = criteria.get(key)
            if best is None or r > best["max_residual"]:
                criteria[key] = {"max_residual": r, "point": [float(c) for c in p],
                                 "fields": list(fields)}
    verdicts = {k: c["max_residual"] < tol for k, c in criteria.items()}
    primary = next(iter(criteria))
    if len(set(verdicts.values())) > 1:
        verdict = "inconclusive"
    else:
        verdict = "holds" if verdicts[primary] else "fails"
    witness = None
    if verdict != "holds":
        w = criteria[primary]
        witness = {"point": w["point"], "fields": w["fields"]}
    summary = {k: {"max_residual": c["max_residual"], "holds": verdicts[k]}
               for k, c in criteria.items()}
    return ClassificationReport(name, verdict, criteria[primary]["max_residual"],
                                len(good), tol, witness, summary,
                                len(results) - len(good))


def involutivity_residuals(ctx):
    n = ctx.dist.n
    skew = (0.0, ())
    brk = (0.0, ())
    for a, b in _pairs(n, False):
        Ea, Eb = ctx.E[a], ctx.E[b]
        s = 0.5 * (_val(_B(ctx, Ea, Eb)) - _val(_B(ctx, Eb, Ea)))
        r = _gnorm(ctx, s)
        if r > skew[0] or not skew[1]:
            skew = (r, (f"E{a}", f"E{b}"))
        br = ctx.bracket(Ea, Eb)
        c = max(abs(float(J.value_of(ctx.inner(z, br)))) for z in ctx.Z)
        if c > brk[0] or not brk[1]:
            brk = (c, (f"E{a}", f"E{b}"))
    return {"skew_sff": skew, "bracket": brk}


def totally_geodesic_residuals(ctx):
    n = ctx.dist.n
    out = {"sym_sff": (0.0, ()), "symmetric_product": (0.0, ()), "geodesic_field": (0.0, ())}

    def bump(key, r, fields):
        if r > out[key][0] or not out[key][1]:
            out[key] = (r, fields)

    for a, b in _pairs(n, True):
        Ea, Eb = ctx.E[a], ctx.E[b]
        bab, bba = _val(_B(ctx, Ea, Eb)), _val(_B(ctx, Eb, Ea))
        bump("sym_sff", _gnorm(ctx, 0.5 * (bab + bba)), (f"E{a}", f"E{b}"))
        sp = ctx.covd(Ea, Eb) + ctx.covd(Eb, Ea)
        bump("symmetric_product", _gnorm(ctx, ctx.proj_perp(sp)), (f"E{a}", f"E{b}"))
        X = Ea if a == b else (Ea + Eb) * (1.0 / math.sqrt(2.0))
        label = (f"E{a}",) if a == b else (f"(E{a}+E{b})/sqrt2",)
        bump("geodesic_field", _gnorm(ctx, _B(ctx, X, X)), label)
    return out


def is_involutive(dist, sampler, tol=1e-8):
    """Sampled check that B is symmetric, cross-checked by brackets."""
    return _classify("involutive", dist, sampler, tol, involutivity_residuals)


def is_totally_geodesic(dist, sampler, tol=1e-8):
    """Sampled check that B^s vanishes, with two equivalent criteria."""
    return _classify("totally_geodesic", dist, sampler, tol, totally_geodesic_residuals)


# -- corank one -----------------------------------------------------------------

def sign_gauge(v, tol=1e-12):
    """Flip ``v`` so its first component above ``tol`` in size is positive."""
    v = np.asarray(v, dtype=float)
    for c in v:
        if abs(c) > tol:
            return v if c > 0 else -v
    return v


def jacobi_eigh(A, tol=1e-15, max_sweeps=100):
    """Eigenpairs of a small symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues ascend; each eigenvector has its first nonzero entry
    positive and ties are broken by lexicographic order of the vectors.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.max(np.abs(A)), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * scale:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                if A[i, j] == 0.0:
                    continue
                theta = (A[j, j] - A[i, i]) / (2.0 * A[i, j])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                R = np.eye(n)
                R[i, i] = R[j, j] = c
                R[i, j], R[j, i] = s, -s
                A = R.T @ A @ R
                V = V @ R
    vals = np.diag(A).copy()
    vecs = [sign_gauge(V[:, k]) for k in range(n)]
    tie = 1e-12 * scale
    order = sorted(range(n), key=lambda k: vals[k])
    out = []
    while order:
        group = [k for k in order if vals[k] - vals[order[0]] <= tie]
        out += sorted(group, key=lambda k: tuple(vecs[k]))
        order = [k for k in order if k not in group]
    return vals[out], np.array([vecs[k] for k in out])


@dataclass(frozen=True)
class HypersurfaceForm:
    p: np.ndarray
    normal: np.ndarray
    b: np.ndarray
    b_sym: np.ndarray
    b_skew: np.ndarray
    principal_curvatures: np.ndarray
    principal_directions: np.ndarray

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in
                ("p", "normal", "b", "b_sym", "b_skew", "principal_curvatures",
                 "principal_directions")}


def hypersurface_form(dist, p, orientation=None):
    """Scalar second fundamental form b_ab = S(E_a, E_b, N) for corank one.

    N is the unit normal with its first nonzero component positive, or, when
    ``orientation`` (a vector or field) is given, the one with g(N, o) > 0.
    """
    if dist.corank != 1:
        raise InputError(f"scalar form needs corank 1, distribution has corank {dist.corank}")
    ctx = DistJets(dist, p, 1)
    N = ctx.Z[0]
    nv = _val(N)
    if orientation is None:
        flip = not np.array_equal(sign_gauge(nv), nv)
    else:
        o = _val(ctx.field(orientation))
        s = float(nv @ _val(ctx.metric) @ o)
        if abs(s) < 1e-12:
            raise InputError("orientation vector is tangent to the distribution")
        flip = s < 0
    if flip:
        N = -N
    n = dist.n
    b = np.array([[float(J.value_of(ctx.inner(_B(ctx, ctx.E[a], ctx.E[c]), N)))
                   for c in range(n)] for a in range(n)])
    bs = 0.5 * (b + b.T)
    ba = 0.5 * (b - b.T)
    vals, vecs = jacobi_eigh(bs)
    E = np.array([_val(e) for e in ctx.E])
    dirs = vecs @ E
    return HypersurfaceForm(ctx.p, _val(N), b, bs, ba, vals, dirs)
