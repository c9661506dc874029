"""Independent reference computations used only by the tests.

Nothing here touches the jet machinery: finite differences, sympy and
closed forms.
"""

import numpy as np
import sympy as sp

from distgeo import jet as J
from distgeo.expr import parse

CHART = ["x", "y", "z"]


# -- random smooth expressions ---------------------------------------------------

# wrappers keep every function inside its domain and the values moderate
_UNARY = [
    "sin({})", "cos({})", "tanh({})", "exp(tanh({}))", "log(1 + ({})^2)",
    "sqrt(1 + ({})^2)", "sinh(tanh({}))", "cosh(tanh({}))", "tan(0.5*tanh({}))",
    "-({})",
]
_BINARY = ["({}) + ({})", "({}) - ({})", "({}) * ({})", "({}) / (2 + sin({}))",
           "tanh({})^2", "(1 + tanh({})^2)^1.5", "({})^3 / (1 + ({})^4)"]


def random_expr_text(rng, depth, chart=CHART):
    """Text of a random expression tree of depth at most ``depth``."""
    if depth <= 1 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return chart[rng.integers(len(chart))]
        return f"{rng.uniform(-2, 2):.6f}"
    if rng.random() < 0.45:
        return _UNARY[rng.integers(len(_UNARY))].format(random_expr_text(rng, depth - 1, chart))
    tmpl = _BINARY[rng.integers(len(_BINARY))]
    args = [random_expr_text(rng, depth - 1, chart) for _ in range(tmpl.count("{}"))]
    return tmpl.format(*args)


def random_expr(rng, depth, chart=CHART):
    return parse(random_expr_text(rng, depth, chart), chart)


# -- finite differences ----------------------------------------------------------

def fd1(f, p, u, h=1e-5):
    p, u = np.asarray(p, float), np.asarray(u, float)
    return (f(p + h * u) - f(p - h * u)) / (2 * h)


def fd2(f, p, u, h=1e-4):
    p, u = np.asarray(p, float), np.asarray(u, float)
    return (f(p + h * u) - 2 * f(p) + f(p - h * u)) / h**2


def jet_directional(e, p, u, order):
    """(value, D_u e, D_u^2 e) from a jet seeded along u only."""
    q = J.seed(p, order, np.atleast_2d(u))
    r = e.eval(q)
    if not isinstance(r, J.Jet):
        return float(r), 0.0, 0.0
    first = float(r.first[0]) if order >= 1 else None
    second = float(r.second[0, 0]) if order >= 2 else None
    return float(r.value), first, second


# -- sympy Christoffel and curvature ---------------------------------------------

def sympy_geometry(metric_texts, chart=CHART):
    """Oracle returning p -> (Gamma[k, i, j], R[l, i, j, k]).

    sympy supplies exact first and second partials of g; the coordinate
    formulas are then applied numerically::

        Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
        R^l_ijk = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_ip Gamma^p_jk - Gamma^l_jp Gamma^p_ik

    with R(d_i, d_j) d_k = R^l_ijk d_l.
    """
    syms = sp.symbols(chart)
    m = len(syms)
    loc = dict(zip(chart, syms))
    G = sp.Matrix([[sp.sympify(t.replace("^", "**"), locals=loc) for t in row]
                   for row in metric_texts])
    dG = [[[sp.diff(G[i, j], syms[a]) for a in range(m)] for j in range(m)] for i in range(m)]
    ddG = [[[[sp.diff(G[i, j], syms[a], syms[b]) for b in range(m)] for a in range(m)]
            for j in range(m)] for i in range(m)]
    fG, fdG, fddG = (sp.lambdify(syms, sp.Array(x), "numpy") for x in (G.tolist(), dG, ddG))

    def at(p):
        g = np.array(fG(*p), dtype=float)
        d = np.array(fdG(*p), dtype=float)        # d[i, j, a] = d_a g_ij
        dd = np.array(fddG(*p), dtype=float)      # dd[i, j, a, b]
        gi = np.linalg.inv(g)
        # lower Christoffel T[l, i, j] and its derivative
        T = 0.5 * (np.einsum("jli->lij", d) + np.einsum("ilj->lij", d) - np.einsum("ijl->lij", d))
        dT = 0.5 * (np.einsum("jlib->lijb", dd) + np.einsum("iljb->lijb", dd)
                    - np.einsum("ijlb->lijb", dd))
        Gam = np.einsum("kl,lij->kij", gi, T)
        dgi = -np.einsum("ka,abc,bl->klc", gi, d, gi)
        dGam = np.einsum("klc,lij->kijc", dgi, T) + np.einsum("kl,lijc->kijc", gi, dT)
        R = (np.einsum("ljki->lijk", dGam) - np.einsum("likj->lijk", dGam)
             + np.einsum("lip,pjk->lijk", Gam, Gam) - np.einsum("ljp,pik->lijk", Gam, Gam))
        return Gam, R

    return at


# -- independent knife-edge integrator --------------------------------------------

def knife_multiplier_rk4(a, omega, T, dt):
    """Knife edge with F = a dx: plain Lagrange multiplier for the rolling
    constraint -sin(th) xd + cos(th) yd = 0, explicit RK4 in (x, y, th, xd, yd, thd).

    Returns times and forward speeds cos(th) xd + sin(th) yd.
    """
    def f(s):
        x, y, th, xd, yd, thd = s
        lam = thd * (np.cos(th) * xd + np.sin(th) * yd) + a * np.sin(th)
        return np.array([xd, yd, thd, a - lam * np.sin(th), lam * np.cos(th), 0.0])

    n = int(round(T / dt))
    s = np.array([0.0, 0.0, 0.0, 0.0, 0.0, omega])
    ts, speeds, states = [0.0], [0.0], [s.copy()]
    for i in range(n):
        k1 = f(s)
        k2 = f(s + 0.5 * dt * k1)
        k3 = f(s + 0.5 * dt * k2)
        k4 = f(s + dt * k3)
        s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ts.append((i + 1) * dt)
        speeds.append(np.cos(s[2]) * s[3] + np.sin(s[2]) * s[4])
        states.append(s.copy())
    return np.array(ts), np.array(speeds), np.array(states)


def forward_speed(traj):
    th = traj.q[:, 2]
    return np.cos(th) * traj.v[:, 0] + np.sin(th) * traj.v[:, 1]


def sphere_point(rng, r, xmin=0.3):
    """Random point of the radius-r sphere with x/r >= xmin."""
    while True:
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        if u[0] >= xmin:
            return r * u


# -- random models -----------------------------------------------------------------

def random_metric_texts(rng, chart=CHART):
    """Diagonally dominant, hence SPD everywhere: 2 + tanh on the diagonal,
    0.3 tanh off it."""
    m = len(chart)
    off = {}
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            if i == j:
                row.append(f"2 + tanh({random_expr_text(rng, 3, chart)})")
            elif j < i:
                row.append(off[(j, i)])
            else:
                off[(i, j)] = f"0.3*tanh({random_expr_text(rng, 3, chart)})"
                row.append(off[(i, j)])
        rows.append(row)
    return rows


def random_distribution(rng, integrable, metric=True):
    """Rank-2 distribution on R^3, optionally with a random metric.

    The integrable kind is tangent to the level sets of x + h(y, z).
    """
    from distgeo.dist import DistributionModel
    from distgeo.riemann import ManifoldModel, euclidean

    base = ManifoldModel.from_text(CHART, random_metric_texts(rng)) if metric else euclidean(CHART)
    if integrable:
        a, b, c, d = rng.uniform(0.3, 1.0, 4)
        hy = f"{a * b}*cos({b}*y)*cos({c}*z) + {d}*z"
        hz = f"-{a * c}*sin({b}*y)*sin({c}*z) + {d}*y"
        gens = [[hy, "-1", "0"], [hz, "0", "-1"]]
    else:
        # a perturbed contact structure, so the bracket stays out of D
        gens = [["1", "0", f"-y/2 + 0.2*tanh({random_expr_text(rng, 3)})"],
                ["0", "1", f"x/2 + 0.2*tanh({random_expr_text(rng, 3)})"]]
    return DistributionModel.from_text(base, gens)


def random_section(rng, dist, depth=2):
    """sum_a f_a X_a with random scalar coefficients."""
    from distgeo.riemann import ScaledField, SumField

    out = None
    for X in dist.generators:
        f = random_expr(rng, depth, dist.base.chart)
        term = ScaledField(f, X)
        out = term if out is None else SumField(out, term)
    return out


def random_point(rng, box):
    return np.array([rng.uniform(lo, hi) for lo, hi in box])
