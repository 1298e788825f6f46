import cmath
import math

import numpy as np
import pytest

from minimax_curve.geometry import (
    ArcProgram,
    ArcSegment,
    DegenerateArcError,
    InputError,
    OrientedPoint,
    chain_jet,
    chain_jet_vec,
    controls_at,
    point_at,
    propagate_arc,
    propagate_program,
    sample_program,
)
from oracles import ode_endpoint

PI = math.pi
O = OrientedPoint(0.0, 0.0, 0.0)


def close(p, q, tol):
    return abs(p.x - q.x) <= tol and abs(p.y - q.y) <= tol and abs(p.theta - q.theta) <= tol


def test_propagate_arc_straight():
    assert propagate_arc(O, ArcSegment(0, 1.0, 2.0)) == OrientedPoint(2.0, 0.0, 0.0)


def test_propagate_arc_quarter_left():
    p = propagate_arc(O, ArcSegment(1, 1.0, PI / 2))
    assert close(p, OrientedPoint(1.0, 1.0, PI / 2), 1e-15)


def test_propagate_arc_right_full_turn():
    p = propagate_arc(O, ArcSegment(-1, 2.0, PI))
    assert close(p, OrientedPoint(0.0, 0.0, -2 * PI), 1e-15)


def test_zero_length_is_bitwise_identity():
    p = OrientedPoint(0.3, -1.7, 2.9)
    assert propagate_arc(p, ArcSegment(1, 5.0, 0.0)) is p
    assert propagate_program(p, ArcProgram((0, 0, 0, 0, 0), 3.0)) == p


def test_turn_with_zero_bound_is_degenerate():
    with pytest.raises(DegenerateArcError):
        propagate_arc(O, ArcSegment(1, 0.0, 1.0))


@pytest.mark.parametrize(
    "args",
    [(2, 1.0, 1.0), (1, -1.0, 1.0), (1, 1.0, -0.5), (0, math.nan, 1.0), (1, 1.0, math.inf)],
)
def test_segment_validation(args):
    with pytest.raises(InputError):
        ArcSegment(*args)


def test_program_validation():
    with pytest.raises(InputError):
        ArcProgram((1, 1, 1, 1), 1.0)
    with pytest.raises(InputError):
        ArcProgram((1, 1, -1, 1, 1), 1.0)
    with pytest.raises(InputError):
        OrientedPoint(math.nan, 0, 0)


def test_example_1a_reaches_goal():
    p = propagate_program(O, ArcProgram((0, 0.375, 0, 0.75, 0.375), 3.9887508486))
    # the curvature is rounded to 10 dp, so the endpoint is good to ~1e-10
    assert close(p, OrientedPoint(1.0, 0.0, 0.0), 1e-8)


def test_example_3a_reaches_goal():
    start = OrientedPoint(0, 0, -PI / 3)
    prog = ArcProgram((0.3141136578, 0, 0.2343580660, 0, 0.2515282761), 8.3661513485)
    p = propagate_program(start, prog)
    assert abs(p.x - 0.4) < 1e-8 and abs(p.y - 0.4) < 1e-8
    assert abs(math.remainder(p.theta + PI / 6, 2 * PI)) < 1e-8


def test_closed_form_matches_ode_integration():
    rng = np.random.default_rng(7)
    for _ in range(20):
        xi = tuple(rng.uniform(0, 1, 5))
        a = rng.uniform(0.1, 6)
        start = OrientedPoint(*rng.uniform(-2, 2, 2), rng.uniform(-PI, PI))
        p = propagate_program(start, ArcProgram(xi, a))
        x, y, th = ode_endpoint(start, xi, a)
        assert abs(p.x - x) < 1e-9 and abs(p.y - y) < 1e-9 and abs(p.theta - th) < 1e-9


def test_sample_straight_line():
    pts = sample_program(O, ArcProgram((0, 0, 1, 0, 0), 0.0), 3)
    assert [(p.x, p.y, p.theta) for p in pts] == [(0, 0, 0), (0.5, 0, 0), (1, 0, 0)]


def test_sample_two_points_are_the_ends():
    prog = ArcProgram((0.2, 0.1, 0.3, 0.4, 0.1), 2.0)
    pts = sample_program(O, prog, 2)
    assert pts[0] == O and pts[1] == propagate_program(O, prog)


def test_sample_loop_closes():
    prog = ArcProgram((2 * PI, 0, 0, 0, 0), 1.0)
    pts = sample_program(O, prog, 5)
    assert abs(pts[-1].x) < 1e-12 and abs(pts[-1].y) < 1e-12
    assert abs(pts[2].x) < 1e-12 and abs(pts[2].y - 2) < 1e-12


def test_sample_needs_two_points():
    with pytest.raises(InputError):
        sample_program(O, ArcProgram((1, 0, 0, 0, 0), 1.0), 1)


def test_unit_speed():
    prog = ArcProgram((0.3, 0.2, 0.4, 0.1, 0.5), 3.0)
    n = 10_000
    pts = sample_program(O, prog, n)
    h = prog.length / (n - 1)
    gaps = [math.hypot(q.x - p.x, q.y - p.y) for p, q in zip(pts, pts[1:])]
    assert max(abs(g - h) for g in gaps) < 1e-6 * h


def test_splitting_a_segment_changes_nothing():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = int(rng.integers(-1, 2))
        a = rng.uniform(0.1, 10)
        x = rng.uniform(0, 2)
        p = OrientedPoint(*rng.uniform(-1, 1, 3))
        s = rng.uniform(0, x)
        whole = propagate_arc(p, ArcSegment(v, a, x))
        split = propagate_arc(propagate_arc(p, ArcSegment(v, a, s)), ArcSegment(v, a, x - s))
        assert close(whole, split, 1e-12)


def test_rigid_motion_equivariance():
    rng = np.random.default_rng(2)
    for _ in range(50):
        prog = ArcProgram(tuple(rng.uniform(0, 1, 5)), rng.uniform(0.1, 5))
        p = OrientedPoint(*rng.uniform(-1, 1, 3))
        ang, shift = rng.uniform(-PI, PI), complex(*rng.uniform(-3, 3, 2))
        z = p.z * cmath.exp(1j * ang) + shift
        moved = OrientedPoint(z.real, z.imag, p.theta + ang)
        e = propagate_program(p, prog)
        ze = e.z * cmath.exp(1j * ang) + shift
        f = propagate_program(moved, prog)
        assert close(f, OrientedPoint(ze.real, ze.imag, e.theta + ang), 1e-12)


def test_reflection_equivariance():
    # mirroring about the x axis turns every left arc into a right arc of the same length
    rng = np.random.default_rng(3)
    for _ in range(50):
        xi = tuple(rng.uniform(0, 1, 5))
        a = rng.uniform(0.1, 5)
        p = OrientedPoint(*rng.uniform(-1, 1, 3))
        e = propagate_program(p, ArcProgram(xi, a))
        q = OrientedPoint(p.x, -p.y, -p.theta)
        segs = [ArcSegment(-v, a, x) for v, x in zip((1, -1, 0, 1, -1), xi)]
        for s in segs:
            q = propagate_arc(q, s)
        assert close(q, OrientedPoint(e.x, -e.y, -e.theta), 1e-12)


def test_point_at_and_controls():
    prog = ArcProgram((1.0, 0.0, 2.0, 0.0, 1.0), 0.5)
    assert point_at(O, prog, prog.length) == propagate_program(O, prog)
    assert controls_at(prog, [0.5, 1.5, 3.5]) == [0.5, 0.0, -0.5]


def test_chain_jet_derivatives_match_finite_differences():
    rng = np.random.default_rng(4)
    lengths = list(rng.uniform(0.1, 1, 6))
    rates = list(rng.uniform(-3, 3, 6))
    jet = chain_jet(0.2 + 0.1j, 0.4, lengths, rates)
    h = 1e-6
    for k in range(6):
        for which, d_end, d_th in (("l", jet.d_length, jet.theta_d_length), ("k", jet.d_rate, jet.theta_d_rate)):
            up = [list(lengths), list(rates)]
            dn = [list(lengths), list(rates)]
            idx = 0 if which == "l" else 1
            up[idx][k] += h
            dn[idx][k] -= h
            jp, jm = chain_jet(0.2 + 0.1j, 0.4, *up), chain_jet(0.2 + 0.1j, 0.4, *dn)
            assert abs((jp.end - jm.end) / (2 * h) - d_end[k]) < 1e-7
            assert abs((jp.theta - jm.theta) / (2 * h) - d_th[k]) < 1e-7


def test_vector_jet_matches_scalar_jet():
    rng = np.random.default_rng(5)
    lengths = rng.uniform(0.0, 0.5, 40)
    rates = rng.uniform(-4, 4, 40)
    rates[::7] = 0.0
    jet = chain_jet(1j, -0.3, lengths, rates)
    end, th, d_len, d_rate, _, _ = chain_jet_vec(1j, -0.3, lengths, rates)
    assert abs(end - jet.end) < 1e-13 and abs(th - jet.theta) < 1e-13
    assert np.max(np.abs(d_len - np.array(jet.d_length))) < 1e-12
    assert np.max(np.abs(d_rate - np.array(jet.d_rate))) < 1e-12
