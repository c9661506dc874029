"""Regular distributions: frames, projections and the intrinsic connection.

Frames are built pointwise by g-Gram-Schmidt, but on jets, so the local
orthonormal fields E_a(u) and Z_j(u) induced near ``p`` are differentiated
consistently by every operation that needs their derivatives. Pivots for the
normal frame are chosen from the value at ``p`` and then held fixed, which
keeps the induced local fields smooth around ``p``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import jet as J
from .errors import (DistGeoError, InputError, NotASectionError,
                     RankDeficiencyError)
from .riemann import LocalJets, ManifoldModel, VectorFieldModel, at_point

__all__ = [
    "DistributionModel", "FrameAtPoint", "FrameField", "DistJets",
    "frame_at", "project_D", "project_perp", "intrinsic_cov_deriv",
    "bracket_D", "koszul_cov_deriv", "torsion_D", "omega_at",
    "omega_perp_at", "PIVOT_TOL", "SECTION_TOL",
]

PIVOT_TOL = 1e-10
SECTION_TOL = 1e-8


@dataclass(frozen=True)
class DistributionModel:
    base: ManifoldModel
    generators: tuple

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        m = self.base.m
        if not gens:
            raise InputError("a distribution needs at least one generator")
        if len(gens) >= m:
            raise InputError(f"rank {len(gens)} must be smaller than the dimension {m}")
        for i, X in enumerate(gens):
            if not isinstance(X, VectorFieldModel):
                raise InputError(f"generator {i} is not a VectorFieldModel")
            if X.dim != m:
                raise InputError(f"generator {i} has {X.dim} components, expected {m}")

    @classmethod
    def from_text(cls, base, generators):
        return cls(base, tuple(base.field(g) for g in generators))

    @property
    def m(self):
        return self.base.m

    @property
    def n(self):
        return len(self.generators)

    @property
    def corank(self):
        return self.m - self.n

    def E(self, a):
        """The local orthonormal field E_a of D induced by Gram-Schmidt."""
        return FrameField("E", a)

    def Z(self, j):
        """The local orthonormal field Z_j of the orthogonal complement."""
        return FrameField("Z", j)


@dataclass(frozen=True)
class FrameField:
    """Reference to a Gram-Schmidt frame element, usable as a vector field."""

    kind: str
    index: int

    def jet(self, ctx):
        if not isinstance(ctx, DistJets):
            raise DistGeoError("frame fields need a distribution context")
        frame = ctx.E if self.kind == "E" else ctx.Z
        if not 0 <= self.index < len(frame):
            raise InputError(f"frame index {self.kind}{self.index} out of range")
        return frame[self.index]


@dataclass(frozen=True)
class FrameAtPoint:
    p: np.ndarray
    E: np.ndarray       # (n, m) rows are E_a
    Z: np.ndarray       # (m - n, m) rows are Z_j
    change_of_basis: np.ndarray  # E = C @ X with X the generator rows

    def to_dict(self):
        return {"p": self.p.tolist(), "E": self.E.tolist(), "Z": self.Z.tolist(),
                "change_of_basis": self.change_of_basis.tolist()}


class DistJets(LocalJets):
    """Local jets of a distribution: generators, frames and projections."""

    def __init__(self, dist, p, order):
        super().__init__(dist.base, p, order)
        self.dist = dist
        self._E = None
        self._Z = None

    # -- frames -------------------------------------------------------------
    def _orthonormalize(self, v, basis, label):
        w = v
        scale = np.sqrt(max(float(J.value_of(self.inner(v, v))), 0.0))
        for _ in range(2):
            for e in basis:
                w = w - self.inner(w, e) * e
        pivot = math.sqrt(max(float(J.value_of(self.inner(w, w))), 0.0))
        if not pivot > PIVOT_TOL * max(float(scale), 1.0):
            raise RankDeficiencyError(f"{label}: Gram pivot below {PIVOT_TOL}", self.p)
        return w / self.norm(w)

    @property
    def generators(self):
        return [self.field(X) for X in self.dist.generators]

    @property
    def E(self):
        if self._E is None:
            out = []
            with at_point(self.p):
                for a, X in enumerate(self.generators):
                    out.append(self._orthonormalize(X, out, f"generator {a} is dependent"))
            self._E = out
        return self._E

    @property
    def Z(self):
        if self._Z is None:
            m = self.model.m
            basis = list(self.E)
            out = []
            remaining = list(range(m))
            with at_point(self.p):
                for _ in range(self.dist.corank):
                    best, best_norm, best_res = None, -1.0, None
                    for i in remaining:
                        r = self.promote(np.eye(m)[i])
                        for _ in range(2):
                            for e in basis + out:
                                r = r - self.inner(r, e) * e
                        nr = float(J.value_of(self.inner(r, r)))
                        if nr > best_norm:
                            best, best_norm, best_res = i, nr, r
                    remaining.remove(best)
                    out.append(self._orthonormalize(best_res, basis + out,
                                                    "normal frame"))
            self._Z = out
        return self._Z

    # -- projections --------------------------------------------------------
    def proj_D(self, v):
        v = self.field(v)
        out = 0
        for e in self.E:
            out = out + self.inner(v, e) * e
        return out

    def proj_perp(self, v):
        v = self.field(v)
        return v - self.proj_D(v)

    def _check(self, residual, what, derivatives, tol):
        val = np.asarray(J.value_of(residual), dtype=float)
        g = np.asarray(J.value_of(self.metric), dtype=float)
        size = float(np.sqrt(max(val @ g @ val, 0.0)))
        if derivatives and isinstance(residual, J.Jet) and residual.first is not None:
            size = max(size, float(np.max(np.abs(residual.first))))
        if size > tol:
            raise NotASectionError(f"{what} (residual {size:.3g})", self.p)

    def require_D(self, X, name="field", derivatives=True, tol=SECTION_TOL):
        """Raise unless ``X`` is a section of D near p (value and first derivatives)."""
        with at_point(self.p):
            self._check(self.proj_perp(X), f"{name} is not a section of D",
                        derivatives, tol)

    def require_perp(self, Z, name="field", derivatives=True, tol=SECTION_TOL):
        with at_point(self.p):
            self._check(self.proj_D(Z), f"{name} is not a section of the orthogonal complement",
                        derivatives, tol)

    # -- connections --------------------------------------------------------
    def covd_D(self, X, Y):
        return self.proj_D(self.covd(X, Y))

    def bracket_D(self, X, Y):
        return self.proj_D(self.bracket(X, Y))

    def koszul(self, X, Y):
        """Koszul formula for the algebroid (D, g, [,]^D), expanded on E."""
        X = self.field(X)
        Y = self.field(Y)
        out = 0
        for e in self.E:
            rhs = (self.directional(self.inner(Y, e), X)
                   + self.directional(self.inner(e, X), Y)
                   - self.directional(self.inner(X, Y), e)
                   + self.inner(self.bracket_D(X, Y), e)
                   - self.inner(self.bracket_D(Y, e), X)
                   + self.inner(self.bracket_D(e, X), Y))
            out = out + (rhs * 0.5) * e
        return out


def _val(x):
    return np.array(J.value_of(x), dtype=float)


def frame_at(dist, p):
    """Orthonormal frames of D_p and of its orthogonal complement."""
    ctx = DistJets(dist, p, 0)
    E = np.array([_val(e) for e in ctx.E])
    Z = np.array([_val(z) for z in ctx.Z])
    X = np.array([_val(x) for x in ctx.generators])
    G = _val(ctx.metric)
    C = np.linalg.solve((X @ G @ X.T).T, (E @ G @ X.T).T).T
    return FrameAtPoint(np.asarray(p, dtype=float), E, Z, C)


def project_D(dist, p, v):
    return _val(DistJets(dist, p, 0).proj_D(np.asarray(v, dtype=float)))


def project_perp(dist, p, v):
    return _val(DistJets(dist, p, 0).proj_perp(np.asarray(v, dtype=float)))


def omega_at(dist, p):
    """Covectors annihilating D_p: the flat images of the normal frame."""
    f = frame_at(dist, p)
    G = _val(DistJets(dist, p, 0).metric)
    return f.Z @ G


def omega_perp_at(dist, p):
    """Covectors annihilating the orthogonal complement: flat images of E."""
    f = frame_at(dist, p)
    G = _val(DistJets(dist, p, 0).metric)
    return f.E @ G


def intrinsic_cov_deriv(dist, X, Y, p):
    """(nabla^D_X Y)(p) = pi^D(nabla_X Y)(p) for sections X, Y of D."""
    ctx = DistJets(dist, p, 1)
    ctx.require_D(X, "X")
    ctx.require_D(Y, "Y")
    return _val(ctx.covd_D(X, Y))


def bracket_D(dist, X, Y, p):
    ctx = DistJets(dist, p, 1)
    return _val(ctx.bracket_D(X, Y))


def koszul_cov_deriv(dist, X, Y, p):
    """nabla^D_X Y obtained from the Koszul formula of the restricted metric."""
    ctx = DistJets(dist, p, 1)
    ctx.require_D(X, "X")
    ctx.require_D(Y, "Y")
    return _val(ctx.koszul(X, Y))


def torsion_D(dist, X, Y, p):
    """nabla^D_X Y - nabla^D_Y X - [X, Y]; equals -pi^perp([X, Y])."""
    ctx = DistJets(dist, p, 1)
    ctx.require_D(X, "X")
    ctx.require_D(Y, "Y")
    return _val(ctx.covd_D(X, Y) - ctx.covd_D(Y, X) - ctx.bracket(X, Y))
