import csv
import math
import time

import numpy as np
import pytest

from distgeo.dynamics import (curve_curvatures, energy_balance, geodesic_ambient,
                              geodesic_intrinsic, newton, nonholonomic, rk4_steps, state_at)
from distgeo.errors import InputError, NotASectionError
from distgeo.riemann import ManifoldModel, VectorFieldModel, euclidean, metric_at

from oracles import CHART, forward_speed, knife_multiplier_rk4, random_point

E3 = euclidean(CHART)


def test_rk4_scalar_order():
    errs = []
    for dt in (0.1, 0.05):
        y = rk4_steps(lambda y: (y, None), [1.0], dt, int(round(1 / dt)))
        errs.append(abs(y[0] - math.e))
    assert errs[0] / errs[1] > 15


def test_straight_line():
    q0, v0 = np.array([0.1, -0.2, 0.3]), np.array([1.0, 2.0, -0.5])
    tr = geodesic_ambient(E3, q0, v0, 1.0, 0.01)
    assert len(tr) == 101 and tr.meta["steps"] == 100
    assert np.max(np.abs(tr.q - (q0 + np.outer(tr.t, v0)))) < 1e-12
    assert np.max(np.abs(tr.a)) == 0.0


def test_equator_geodesic_in_sphere_chart():
    mod = ManifoldModel.from_text(["th", "ph"], [["1", "0"], ["0", "sin(th)^2"]])
    tr = geodesic_ambient(mod, [math.pi / 2, 0.0], [0.0, 1.0], 2.0, 1e-3)
    assert np.max(np.abs(tr.q[:, 0] - math.pi / 2)) < 1e-12
    assert np.max(np.abs(tr.q[:, 1] - tr.t)) < 1e-10
    # a tilted great circle: energy is conserved to integrator accuracy
    tr = geodesic_ambient(mod, [1.0, 0.0], [0.3, 0.8], 3.0, 1e-3)
    assert energy_balance(mod, tr) < 1e-10


def test_heis_intrinsic_straight_line(fixtures):
    heis = fixtures["HEIS"].distribution
    tr = geodesic_intrinsic(heis, [0, 0, 0], [1, 0, 0], 1.0, 1e-3)
    ref = np.column_stack([tr.t, 0 * tr.t, 0 * tr.t])
    assert np.max(np.abs(tr.q - ref)) < 1e-12
    assert np.max(tr.constraint_residual) < 1e-12


def test_heis_totally_geodesic_dynamics(fixtures):
    heis = fixtures["HEIS"]
    rng = np.random.default_rng(0)
    for _ in range(3):
        q0 = random_point(rng, heis.box)
        c = rng.normal(size=2)
        v0 = c[0] * np.array([1, 0, -q0[1] / 2]) + c[1] * np.array([0, 1, q0[0] / 2])
        a = geodesic_ambient(heis.distribution, q0, v0, 1.0, 1e-3)
        b = geodesic_intrinsic(heis.distribution, q0, v0, 1.0, 1e-3)
        assert np.max(np.abs(a.q - b.q)) < 1e-7


def test_sphere_great_circle(fixtures):
    sphere = fixtures["SPHERE"].distribution
    tr = geodesic_intrinsic(sphere, [2, 0, 0], [0, 1, 0], 1.0, 1e-3)
    ref = 2 * np.column_stack([np.cos(tr.t / 2), np.sin(tr.t / 2), 0 * tr.t])
    assert np.max(np.abs(tr.q - ref)) < 1e-10
    curve_curvatures(sphere, tr)
    assert np.max(np.abs(tr.k - 0.5)) < 1e-8
    assert np.max(np.abs(tr.kperp - 0.5)) < 1e-8
    assert np.max(tr.kD) < 1e-8
    assert np.max(np.abs(tr.k**2 - tr.kD**2 - tr.kperp**2)) < 1e-7
    # the reaction is the centripetal force, normal to the sphere
    assert np.max(tr.dalembert_residual) < 1e-9
    amb = geodesic_ambient(sphere, [2, 0, 0], [0, 1, 0], 1.0, 1e-3)
    assert np.max(np.abs(amb.q - tr.q)) > 1e-3


def test_flat_circle_curvatures(fixtures):
    flat = fixtures["FLAT2"].distribution
    F = VectorFieldModel.from_text(["-x", "-y", "0"], CHART)
    tr = nonholonomic(flat, F, [1, 0, 0], [0, 1, 0], 2.0, 1e-3)
    ref = np.column_stack([np.cos(tr.t), np.sin(tr.t), 0 * tr.t])
    assert np.max(np.abs(tr.q - ref)) < 1e-10
    curve_curvatures(flat, tr)
    assert np.max(np.abs(tr.k - 1)) < 1e-8
    assert np.max(np.abs(tr.kD - 1)) < 1e-8
    assert np.max(tr.kperp) < 1e-12
    ambient = curve_curvatures(E3, newton(E3, F, [1, 0, 0], [0, 1, 0], 2.0, 1e-3))
    assert np.max(np.abs(ambient.k - 1)) < 1e-8 and ambient.kD is None


def test_uniform_gravity():
    g = VectorFieldModel.from_text(["0", "0", "-1"], CHART)
    q0, v0 = np.array([0, 0, 1.0]), np.array([1, 0, 2.0])
    tr = newton(E3, g, q0, v0, 1.0, 0.01)
    ref = q0 + np.outer(tr.t, v0) - 0.5 * np.outer(tr.t**2, [0, 0, 1])
    assert np.max(np.abs(tr.q - ref)) < 1e-12
    assert energy_balance(E3, tr) < 1e-10


def test_zero_force_is_geodesic():
    mod = ManifoldModel.from_text(CHART, [["1 + x^2", "0", "0"], ["0", "2", "0"],
                                          ["0", "0", "exp(y/3)"]])
    zero = VectorFieldModel.from_text(["0", "0", "0"], CHART)
    a = newton(mod, zero, [0.1, 0.2, 0.3], [1, -1, 0.5], 1.0, 1e-2)
    b = geodesic_ambient(mod, [0.1, 0.2, 0.3], [1, -1, 0.5], 1.0, 1e-2)
    assert np.array_equal(a.q, b.q) and np.array_equal(a.v, b.v)


def test_energy_balance_curved_with_force():
    mod = ManifoldModel.from_text(CHART, [["1 + x^2", "0", "0"], ["0", "2", "0"],
                                          ["0", "0", "exp(y/3)"]])
    F = VectorFieldModel.from_text(["sin(y)", "-x", "0.5"], CHART)
    tr = newton(mod, F, [0.1, 0.2, 0.3], [1, -1, 0.5], 2.0, 1e-3)
    assert energy_balance(mod, tr) < 1e-8


def test_knife_closed_form(fixtures):
    knife = fixtures["KNIFE"]
    t0 = time.perf_counter()
    tr = nonholonomic(knife.distribution, knife.force, [0, 0, 0], [0, 0, 1], 2 * math.pi, 1e-3)
    assert time.perf_counter() - t0 < 10
    assert np.max(np.abs(forward_speed(tr) - np.sin(tr.t))) < 1e-6
    assert np.max(tr.constraint_residual) < 1e-9
    assert np.max(tr.dalembert_residual) < 1e-9
    power = np.einsum("ij,ij->i", tr.reaction, tr.v)
    assert np.max(np.abs(power)) < 1e-9
    assert np.max(np.abs(tr.q[:, 2] - tr.t)) < 1e-10
    assert energy_balance(knife.distribution, tr) < 1e-8


def test_knife_against_multiplier_oracle(fixtures):
    knife = fixtures["KNIFE"]
    a, omega = 1.7, 1.3
    F = VectorFieldModel.from_text([str(a), "0", "0"], knife.manifold.chart)
    tr = nonholonomic(knife.distribution, F, [0, 0, 0], [0, 0, omega], 3.0, 1e-2)
    ts, speeds, states = knife_multiplier_rk4(a, omega, 3.0, 1e-2)
    assert np.max(np.abs(forward_speed(tr) - speeds)) < 1e-6
    assert np.max(np.abs(tr.q - states[:, :3])) < 1e-6
    assert np.max(np.abs(forward_speed(tr) - a / omega * np.sin(omega * tr.t))) < 1e-5


def test_knife_long_run_drift(fixtures):
    knife = fixtures["KNIFE"]
    tr = nonholonomic(knife.distribution, knife.force, [0.2, -0.1, 0.5], [0, 0, 1], 10.0, 1e-2)
    assert np.max(tr.constraint_residual) < 1e-9
    assert np.max(tr.dalembert_residual) < 1e-9


def test_initial_velocity_must_lie_in_D(fixtures):
    heis = fixtures["HEIS"].distribution
    with pytest.raises(NotASectionError):
        geodesic_intrinsic(heis, [0, 0, 0], [0, 0, 1], 1.0, 1e-2)
    with pytest.raises(NotASectionError):
        curve_curvatures(heis, geodesic_ambient(heis, [0, 0, 0], [0, 0, 1], 0.1, 1e-2))
    with pytest.raises(InputError):
        geodesic_ambient(E3, [0, 0], [1, 0, 0], 1.0, 1e-2)
    with pytest.raises(InputError):
        geodesic_ambient(E3, [0, 0, 0], [1, 0, 0], 1.0, 0.0)
    with pytest.raises(InputError):
        geodesic_ambient(E3, [0, 0, 0], [1, 0, 0], 1e-3, 1e-2)


def test_csv_output(tmp_path, fixtures):
    tr = geodesic_ambient(E3, [0, 0, 0], [1, 0, 0], 0.05, 0.01)
    path = tmp_path / "amb.csv"
    tr.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "q0", "q1", "q2", "v0", "v1", "v2", "k", "kD", "kperp",
                       "R0", "R1", "R2", "constraint_residual"]
    assert len(rows) == 7
    assert rows[1][7:] == [""] * 7
    assert float(rows[-1][1]) == pytest.approx(0.05)
    sphere = fixtures["SPHERE"].distribution
    tr = curve_curvatures(sphere, geodesic_intrinsic(sphere, [2, 0, 0], [0, 1, 0], 0.02, 0.01))
    tr.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert all(cell != "" for cell in rows[2])


def test_state_at(fixtures):
    sphere = fixtures["SPHERE"].distribution
    tr = geodesic_intrinsic(sphere, [2, 0, 0], [0, 1, 0], 1.0, 0.05)
    for t in (0.0, 0.333, 0.52, 1.0):
        q, v = state_at(sphere, tr, t)
        assert np.max(np.abs(q - 2 * np.array([math.cos(t / 2), math.sin(t / 2), 0]))) < 1e-6
        assert np.max(np.abs(v - np.array([-math.sin(t / 2), math.cos(t / 2), 0]))) < 1e-6
    with pytest.raises(InputError):
        state_at(sphere, tr, 1.5)


def test_geodesic_proposition_both_ways(fixtures):
    # intrinsic geodesics are ambient geodesics exactly when B(v, v) = 0
    for name, expect in (("HEIS", True), ("SPHERE", False)):
        sc = fixtures[name]
        q0, v0 = sc.run["q0"], sc.run["v0"]
        tr = curve_curvatures(sc.distribution,
                              geodesic_intrinsic(sc.distribution, q0, v0, 1.0, 1e-3))
        G = [metric_at(sc.manifold, q) for q in tr.q]
        acc = np.array([math.sqrt(a @ g @ a) for a, g in zip(tr.a, G)])
        assert bool(np.all(acc < 1e-6)) is expect
        assert bool(np.all(tr.kperp < 1e-6)) is expect
        assert np.max(np.abs(acc - tr.kperp)) < 1e-8
