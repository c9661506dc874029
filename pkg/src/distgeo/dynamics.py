"""Geodesics and mechanical trajectories, free or constrained to a distribution.

Constrained motion keeps pi^perp(v) = 0. Differentiating that constraint
along the motion gives the multiplier term in closed projector form::

    dv/dt = pi^D(F - Gamma(v, v)) - (D_v pi^perp) v

with pi^D = X^T (X G X^T)^-1 X G built from the generator matrix X. This is
the same acceleration that solving for multipliers on a normal frame gives,
but it needs no frame and no gauge. After every RK4 step v is projected back
onto D. The reaction force along the curve is R = nabla_v v - F.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import jet as J
from .dist import DistJets, DistributionModel
from .errors import InputError, NotASectionError, NotSPDError, NumericError
from .riemann import ManifoldModel, at_point

__all__ = [
    "Trajectory", "geodesic_ambient", "geodesic_intrinsic", "curve_curvatures",
    "newton", "nonholonomic", "rk4_steps", "energy_balance", "state_at",
]


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    a: np.ndarray                     # nabla_v v at each sample
    k: np.ndarray = None
    kD: np.ndarray = None
    kperp: np.ndarray = None
    reaction: np.ndarray = None
    constraint_residual: np.ndarray = None
    dalembert_residual: np.ndarray = None
    force: np.ndarray = None
    error: str = None
    meta: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.q.shape[1]

    def __len__(self):
        return len(self.t)

    def header(self):
        m = self.m
        return (["t"] + [f"q{i}" for i in range(m)] + [f"v{i}" for i in range(m)]
                + ["k", "kD", "kperp"] + [f"R{i}" for i in range(m)]
                + ["constraint_residual"])

    def rows(self):
        def col(arr, i):
            return "" if arr is None else format(float(arr[i]), ".17g")

        for i in range(len(self.t)):
            row = [format(float(self.t[i]), ".17g")]
            row += [format(float(c), ".17g") for c in self.q[i]]
            row += [format(float(c), ".17g") for c in self.v[i]]
            row += [col(self.k, i), col(self.kD, i), col(self.kperp, i)]
            if self.reaction is None:
                row += [""] * self.m
            else:
                row += [format(float(c), ".17g") for c in self.reaction[i]]
            row.append(col(self.constraint_residual, i))
            yield row

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for row in self.rows():
                w.writerow(row)


# -- pointwise evaluation -------------------------------------------------------

class _Point:
    """Metric, Christoffel symbols, generators and force at one point, as arrays."""

    def __init__(self, mod, p, gens=None, force=None):
        m = mod.m
        q = J.seed(p, 1)
        with at_point(p):
            self.G, self.dG = _array_jet([[e.eval(q) for e in row] for row in mod.metric], m)
            try:
                np.linalg.cholesky(self.G)
            except np.linalg.LinAlgError as exc:
                raise NotSPDError("metric is not positive definite", p) from exc
            if np.any(self.dG):
                dG = self.dG  # dG[a, b, c] = d_c g_ab
                T = 0.5 * (dG.transpose(1, 2, 0) + dG.transpose(1, 0, 2)
                           - dG.transpose(2, 0, 1))
                self.Gamma = np.linalg.solve(self.G, T.reshape(m, m * m)).reshape(m, m, m)
            else:
                self.Gamma = None
            self.X = self.dX = None
            if gens is not None:
                self.X, self.dX = _array_jet([[c.eval(q) for c in X.components]
                                              for X in gens], m)
                self.W = self.X @ self.G
                try:
                    self.Ainv = np.linalg.inv(self.W @ self.X.T)
                except np.linalg.LinAlgError as exc:
                    raise NumericError("generators became dependent", p) from exc
            self.F = None
            if force is not None:
                self.F = np.array([float(c.eval(p)) for c in force.components])
        self.p = p

    def gamma(self, v):
        if self.Gamma is None:
            return np.zeros(len(v))
        return np.einsum("kij,i,j->k", self.Gamma, v, v)

    def inner(self, u, w):
        return float(u @ self.G @ w)

    def proj_D(self, w):
        return self.X.T @ (self.Ainv @ (self.W @ w))

    def d_proj_D(self, v, w):
        """Derivative of q -> pi^D(q) w along v, for fixed w."""
        X, G, W = self.X, self.G, self.W
        dX = self.dX @ v            # (n, m)
        dG = self.dG @ v            # (m, m)
        dW = dX @ G + X @ dG
        dA = dW @ X.T + W @ dX.T
        c = self.Ainv @ (W @ w)
        dc = self.Ainv @ (dW @ w - dA @ c)
        return dX.T @ c + X.T @ dc


def _array_jet(entries, m):
    """Values and coordinate gradients of a grid of scalars (floats or jets)."""
    rows, cols = len(entries), len(entries[0])
    value = np.zeros((rows, cols))
    grad = np.zeros((rows, cols, m))
    for i, row in enumerate(entries):
        for j, e in enumerate(row):
            if isinstance(e, J.Jet):
                value[i, j] = e.value
                grad[i, j] = e.first
            else:
                value[i, j] = e
    return value, grad


# -- integration -------------------------------------------------------------------

def _steps(T, dt):
    if not dt > 0:
        raise InputError("dt must be positive")
    if not T >= dt:
        raise InputError("T must be at least dt")
    n = int(round(T / dt))
    return n


def rk4_steps(f, y0, dt, n, start=None, observe=None):
    """Classic RK4 for ``y' = f(y)``; ``f`` returns (dy, info).

    ``start(y)`` evaluates the first stage and may replace the state (used to
    re-project onto the constraint at no extra cost); it returns
    (y, dy, info). ``observe(i, y, info)`` sees every sample.
    """
    if start is None:
        def start(y):
            return (y,) + tuple(f(y))
    y = np.asarray(y0, dtype=float)
    for i in range(n + 1):
        y, k1, info = start(y)
        if observe is not None:
            observe(i, y, info)
        if i == n:
            break
        k2, _ = f(y + 0.5 * dt * k1)
        k3, _ = f(y + 0.5 * dt * k2)
        k4, _ = f(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


class _Recorder:
    def __init__(self, m, n, constrained):
        self.t, self.q, self.v, self.a = [], [], [], []
        self.R, self.res, self.dal, self.F = [], [], [], []
        self.constrained = constrained
        self.dt = None

    def __call__(self, i, y, info):
        m = len(y) // 2
        self.t.append(i * self.dt)
        self.q.append(y[:m].copy())
        self.v.append(y[m:].copy())
        self.a.append(info["a"])
        self.F.append(info["F"])
        if self.constrained:
            self.R.append(info["R"])
            self.res.append(info["residual"])
            self.dal.append(info["dalembert"])

    def build(self, error=None):
        arr = np.array
        traj = Trajectory(arr(self.t), arr(self.q), arr(self.v), arr(self.a),
                          force=arr(self.F), error=error)
        if self.constrained:
            traj.reaction = arr(self.R)
            traj.constraint_residual = arr(self.res)
            traj.dalembert_residual = arr(self.dal)
        return traj


def _check_vec(name, v, m):
    v = np.asarray(v, dtype=float)
    if v.shape != (m,):
        raise InputError(f"{name} must have {m} components, got {v.size}")
    return v


def _run(mod, gens, force, q0, v0, T, dt):
    m = mod.m
    q0 = _check_vec("q0", q0, m)
    v0 = _check_vec("v0", v0, m)
    n = _steps(T, dt)
    constrained = gens is not None
    zero = np.zeros(m)

    def accel(pt, v):
        F = zero if pt.F is None else pt.F
        gam = pt.gamma(v)
        if not constrained:
            return F - gam, {"a": F.copy(), "F": F}
        # (D_v pi^perp) v = -(D_v pi^D) v
        vdot = pt.proj_D(F - gam) + pt.d_proj_D(v, v)
        a = vdot + gam
        R = a - F
        RD = pt.proj_D(R)
        perp_v = v - pt.proj_D(v)
        info = {"a": a, "F": F, "R": R,
                "residual": math.sqrt(max(pt.inner(perp_v, perp_v), 0.0)),
                "dalembert": math.sqrt(max(pt.inner(RD, RD), 0.0))}
        return vdot, info

    def rhs(y):
        q, v = y[:m], y[m:]
        vdot, info = accel(_Point(mod, q, gens, force), v)
        return np.concatenate([v, vdot]), info

    def start(y):
        q, v = y[:m], y[m:]
        pt = _Point(mod, q, gens, force)
        if constrained:
            v = pt.proj_D(v)
            y = np.concatenate([q, v])
        vdot, info = accel(pt, v)
        return y, np.concatenate([v, vdot]), info

    if constrained:
        pt0 = _Point(mod, q0, gens)
        off = v0 - pt0.proj_D(v0)
        if math.sqrt(max(pt0.inner(off, off), 0.0)) > 1e-8:
            raise NotASectionError("initial velocity is not in D", q0)

    rec = _Recorder(m, n, constrained)
    rec.dt = dt
    error = None
    try:
        rk4_steps(rhs, np.concatenate([q0, v0]), dt, n, start=start, observe=rec)
    except NumericError as exc:
        error = str(exc)
    traj = rec.build(error)
    traj.meta = {"dt": dt, "T": n * dt, "steps": n}
    return traj


def geodesic_ambient(mod, q0, v0, T, dt):
    """RK4 integration of nabla_v v = 0."""
    return _run(_base(mod), None, None, q0, v0, T, dt)


def newton(mod, F, q0, v0, T, dt):
    """RK4 integration of nabla_v v = F(q)."""
    return _run(_base(mod), None, F, q0, v0, T, dt)


def geodesic_intrinsic(dist, q0, v0, T, dt):
    """Curves with velocity in D and nabla^D_v v = 0."""
    return _run(dist.base, dist.generators, None, q0, v0, T, dt)


def nonholonomic(dist, F, q0, v0, T, dt):
    """pi^D(nabla_v v) = pi^D(F) with v in D; records the reaction force."""
    return _run(dist.base, dist.generators, F, q0, v0, T, dt)


def _base(mod):
    if isinstance(mod, DistributionModel):
        return mod.base
    if not isinstance(mod, ManifoldModel):
        raise InputError("expected a manifold or distribution model")
    return mod


# -- diagnostics -------------------------------------------------------------------

def curve_curvatures(model, traj, tol=1e-8):
    """Annotate ``traj`` with k, and with k^D, k^perp when a distribution is given.

    k^perp is ||B(v, v)||, evaluated from the second fundamental form at each
    sample rather than from the stored acceleration.
    """
    dist = model if isinstance(model, DistributionModel) else None
    mod = _base(model)
    ks, kd, kp = [], [], []
    for q, v, a in zip(traj.q, traj.v, traj.a):
        if dist is None:
            pt = _Point(mod, q)
            ks.append(math.sqrt(max(pt.inner(a, a), 0.0)))
            continue
        ctx = DistJets(dist, q, 1)
        G = np.asarray(J.value_of(ctx.metric))
        with at_point(q):
            vperp = np.asarray(J.value_of(ctx.proj_perp(v)))
            if math.sqrt(max(vperp @ G @ vperp, 0.0)) > tol:
                raise NotASectionError("velocity is not in D", q)
            aD = np.asarray(J.value_of(ctx.proj_D(a)))
            B = _sff_vv(ctx, v)
        ks.append(math.sqrt(max(a @ G @ a, 0.0)))
        kd.append(math.sqrt(max(aD @ G @ aD, 0.0)))
        kp.append(math.sqrt(max(B @ G @ B, 0.0)))
    traj.k = np.array(ks)
    if dist is not None:
        traj.kD = np.array(kd)
        traj.kperp = np.array(kp)
    return traj


def _sff_vv(ctx, v):
    """B(v, v) for a vector v in D_p, via the D-valued field pi^D(v).

    pi^D(v) extends v to a local section of D, and B is tensorial.
    """
    V = ctx.proj_D(np.asarray(v, dtype=float))
    return np.asarray(J.value_of(ctx.proj_perp(ctx.covd(V, V))), dtype=float)


def state_at(mod, traj, t):
    """(q, v) at time ``t`` by cubic Hermite interpolation between samples.

    The coordinate acceleration dv/dt = a - Gamma(v, v) supplies the slopes
    for v, so the interpolant keeps the fourth-order accuracy of the grid.
    """
    mod = _base(mod)
    ts = traj.t
    if not ts[0] <= t <= ts[-1]:
        raise InputError(f"t={t} lies outside [{ts[0]}, {ts[-1]}]")
    i = min(int(np.searchsorted(ts, t, side="right")) - 1, len(ts) - 2)
    if len(ts) == 1:
        return traj.q[0].copy(), traj.v[0].copy()
    h = ts[i + 1] - ts[i]
    s = (t - ts[i]) / h
    h00, h10 = 2 * s**3 - 3 * s**2 + 1, s**3 - 2 * s**2 + s
    h01, h11 = -2 * s**3 + 3 * s**2, s**3 - s**2

    def vdot(j):
        return traj.a[j] - _Point(mod, traj.q[j]).gamma(traj.v[j])

    q = h00 * traj.q[i] + h10 * h * traj.v[i] + h01 * traj.q[i + 1] + h11 * h * traj.v[i + 1]
    v = h00 * traj.v[i] + h10 * h * vdot(i) + h01 * traj.v[i + 1] + h11 * h * vdot(i + 1)
    return q, v


def energy_balance(mod, traj):
    """Max over samples of |E(t) - E(0) - int_0^t g(F, v) ds| (trapezoid rule
    refined by Simpson on even intervals)."""
    mod = _base(mod)
    E = np.array([0.5 * _Point(mod, q).inner(v, v) for q, v in zip(traj.q, traj.v)])
    if traj.force is None:
        P = np.zeros(len(E))
    else:
        P = np.array([_Point(mod, q).inner(f, v) for q, v, f in zip(traj.q, traj.v, traj.force)])
    dt = traj.t[1] - traj.t[0] if len(traj.t) > 1 else 0.0
    work = np.zeros(len(E))
    for i in range(1, len(E)):
        if i % 2 == 0:
            work[i] = work[i - 2] + dt / 3.0 * (P[i - 2] + 4 * P[i - 1] + P[i])
        else:
            work[i] = work[i - 1] + 0.5 * dt * (P[i - 1] + P[i])
    return float(np.max(np.abs(E - E[0] - work)))
