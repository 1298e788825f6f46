import math

import numpy as np
import pytest

from conftest import ex1, ex2, ex3
from minimax_curve.geometry import ArcProgram, OrientedPoint, propagate_program
from minimax_curve.model import (
    ClassificationError,
    ProblemInstance,
    Screen,
    canonicalize_loops,
    classify,
    feasibility_screen,
    in_family,
    pieces,
    reflect_program,
    residual_jacobian,
    residuals,
    swap_letters,
)

PI = math.pi


def test_collinear_residuals_exactly_zero():
    inst = ProblemInstance.from_values(0, 0, 0, 1, 0, 0, 1.0)
    r = residuals(inst, ArcProgram((0, 0, 1, 0, 0), 0.0))
    assert r.as_array().tolist() == [0.0] * 5


def test_example_3a_residuals():
    prog = ArcProgram((0.3141136578, 0, 0.2343580660, 0, 0.2515282761), 8.3661513485)
    assert np.max(np.abs(residuals(ex3(0.8), prog).as_array())) < 1e-8


def test_example_2b_residuals():
    inst = ex2(2 * PI / 3)
    assert abs(inst.start.x + math.sqrt(3) / 2) < 1e-15 and abs(inst.start.y + 0.5) < 1e-15
    prog = ArcProgram((0, 1.4538775285, 0, 5.4698253525, 1.4538775285), 0.8174619979)
    assert np.max(np.abs(residuals(inst, prog).as_array())) < 1e-8


def test_heading_is_matched_modulo_full_turns():
    inst = ProblemInstance.from_values(0, 0, 0, 0, 0, 0, 2 * PI)
    r = residuals(inst, ArcProgram((2 * PI, 0, 0, 0, 0), 1.0))
    assert r.norm() < 1e-14


def test_residual_norm_invariant_under_rigid_motion():
    rng = np.random.default_rng(0)
    inst = ex3(1.3)
    for _ in range(30):
        prog = ArcProgram(tuple(rng.uniform(0, 0.5, 5)), rng.uniform(0.5, 10))
        ang = rng.uniform(-PI, PI)
        moved = inst.transformed(ang, *rng.uniform(-5, 5, 2))
        r0, r1 = residuals(inst, prog), residuals(moved, prog)
        assert abs(r0.norm() - r1.norm()) < 1e-12
        # position gap rotates with the frame
        z0, z1 = complex(r0.pos_x, r0.pos_y), complex(r1.pos_x, r1.pos_y)
        assert abs(z0 * complex(math.cos(ang), math.sin(ang)) - z1) < 1e-12


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(1)
    inst = ex3(2.0)
    for _ in range(20):
        x = np.r_[rng.uniform(0, 0.6, 5), rng.uniform(0.5, 10)]
        _, J = residual_jacobian(inst, x)
        h = 1e-6
        for k in range(6):
            e = np.zeros(6)
            e[k] = h
            fd = (residual_jacobian(inst, x + e)[0] - residual_jacobian(inst, x - e)[0]) / (2 * h)
            assert np.allclose(fd, J[:, k], rtol=1e-5, atol=1e-7)


def test_jacobian_residual_agrees_with_residuals():
    prog = ArcProgram((0.1, 0.2, 0.3, 0.4, 0.5), 3.0)
    r, _ = residual_jacobian(ex3(1.5), prog.as_vector())
    assert np.allclose(r, residuals(ex3(1.5), prog).as_array(), atol=1e-15)


@pytest.mark.parametrize("tf, kind", [(0.9, Screen.INFEASIBLE), (1.0, Screen.TRIVIAL), (1.5, Screen.GENERAL)])
def test_feasibility_screen(tf, kind):
    res = feasibility_screen(ex1(tf))
    assert res.kind is kind
    if kind is Screen.TRIVIAL:
        assert res.program.a == 0.0 and res.program.xi == (0, 0, 1, 0, 0)


def test_tight_length_without_collinear_tangents_is_infeasible():
    inst = ProblemInstance.from_values(0, 0, 0.3, 1, 0, 0, 1.0)
    assert feasibility_screen(inst).kind is Screen.INFEASIBLE


def test_classify_example_1a():
    prog = ArcProgram((0, 0.375, 0, 0.75, 0.375), 3.9887508486)
    assert classify(prog, zero_tol=1e-6) == "RLR"


def test_classify_loop_and_segment():
    assert classify(ArcProgram((4, 0, 1, 0, 0), PI / 2), ex1(5)) == "OS"


def test_classify_empty_is_an_error():
    with pytest.raises(ClassificationError):
        classify(ArcProgram((0, 0, 0, 0, 0), 1.0), ex1(1.5))


def test_classify_drops_and_merges():
    # the tiny R and S arcs vanish and the two L arcs merge into one
    prog = ArcProgram((0.3, 1e-9, 1e-9, 0.4, 0.2), 2.0)
    assert classify(prog, zero_tol=1e-6) == "LR"


def test_classify_rejects_four_turns():
    with pytest.raises(ClassificationError):
        classify(ArcProgram((0.3, 0.3, 0, 0.3, 0.3), 2.0), zero_tol=1e-6)


@pytest.mark.parametrize("ts", ["L", "S", "LSR", "RLR", "LO", "OR", "SOS", "OS", "SO", "O", "RS", "LR"])
def test_family_members(ts):
    assert in_family(ts)


@pytest.mark.parametrize("ts", ["", "LRLR", "LSLS", "SOSO", "OO", "LOS", "SLS", "LL"])
def test_family_outsiders(ts):
    assert not in_family(ts)


def test_reflect_rlr_permutes_the_arcs():
    # R p L q R r becomes L p R q L r: slots (p, q, 0, r, 0)
    assert reflect_program(ArcProgram((0, 1, 0, 2, 3), 1.0)).xi == (1, 2, 0, 3, 0)


def test_reflect_straight_is_itself():
    prog = ArcProgram((0, 0, 1.5, 0, 0), 2.0)
    assert reflect_program(prog) == prog


def test_reflect_loop_program_is_the_mirror_curve():
    prog = ArcProgram((4, 0, 1, 0, 0), PI / 2)
    m = reflect_program(prog)
    assert m.a == prog.a and m.xi == (0, 4, 1, 0, 0)
    inst = ex1(5)
    end = propagate_program(inst.reflected().start, m)
    assert end.same_pose(inst.reflected().goal, 1e-12)


def test_reflect_solves_the_reflected_instance():
    inst = ex3(0.8)
    prog = ArcProgram((0.3141136578, 0, 0.2343580660, 0, 0.2515282761), 8.3661513485)
    m = reflect_program(prog)
    assert residuals(inst.reflected(), m).norm() < 1e-8
    assert classify(m, inst) == swap_letters(classify(prog, inst)) == "RSL"


def test_full_turn_slot_is_its_own_piece():
    prog = ArcProgram((PI / 3, 0, 0, 2 * PI, 0), 1.0)
    assert [p.letter for p in pieces(prog, 1e-6)] == ["L", "O"]


def test_canonicalize_moves_loop_to_the_end():
    # L, loop, L: same curve as a single arc followed by the loop
    prog = ArcProgram((0.5, 0, 0, 2 * PI, 0), 1.0)
    inner = ArcProgram((0.2, 0, 0, 0.3, 0), 1.0)
    assert canonicalize_loops(inner, 1e-6) == inner
    out = canonicalize_loops(ArcProgram((0.5 + 2 * PI, 0, 0, 0, 0), 1.0), 1e-6)
    assert out.xi[0] == pytest.approx(0.5) and out.xi[3] == pytest.approx(2 * PI)
    assert canonicalize_loops(prog, 1e-6) == prog


def test_instance_validation():
    with pytest.raises(ValueError):
        ProblemInstance(OrientedPoint(0, 0, 0), OrientedPoint(1, 0, 0), 0.0)
    with pytest.raises(ValueError):
        ProblemInstance.from_values(0, 0, 0, 1, 0, 0, math.inf)
