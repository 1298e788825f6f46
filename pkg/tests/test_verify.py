import math

import numpy as np
import pytest

from conftest import ex1, ex2, ex3, solved
from minimax_curve.geometry import OrientedPoint, propagate_program
from minimax_curve.optimizer import InfeasibleInstanceError
from minimax_curve.verify import (
    control_bands,
    dubins_solve,
    expected_bands,
    md_crosscheck,
    transcription_solve,
)
from oracles import tangent_dubins_length

PI = math.pi
WORDS = {"LSL", "RSR", "LSR", "RSL", "RLR", "LRL"}

# shortest-path lengths from the tangent-line construction (tests/oracles.py)
ORACLE_TF_3A = 0.799999999998996
ORACLE_TF_3B = 1.3000000000166296


def test_dubins_collinear_is_straight():
    d = dubins_solve(OrientedPoint(0, 0, 0), OrientedPoint(4, 0, 0), 1.0)
    assert d.word == "S" and abs(d.t_f_star - 4) < 1e-12


def test_dubins_half_circle():
    d = dubins_solve(OrientedPoint(0, 0, 0), OrientedPoint(0, 2, PI), 1.0)
    assert abs(d.t_f_star - PI) < 1e-12 and d.word == "L"


def test_dubins_example_3a():
    inst = ex3(0.8)
    d = dubins_solve(inst.start, inst.goal, 8.3661513485)
    assert d.t_f_star <= 0.8 + 1e-6 and d.word == "LSR"
    assert abs(d.t_f_star - ORACLE_TF_3A) < 1e-9
    assert propagate_program(inst.start, d.program()).same_pose(inst.goal, 1e-9)


def test_dubins_matches_tangent_construction():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        s = OrientedPoint(*rng.uniform(-3, 3, 2), rng.uniform(-PI, PI))
        g = OrientedPoint(*rng.uniform(-3, 3, 2), rng.uniform(-PI, PI))
        d = dubins_solve(s, g, 1.0)
        assert abs(d.t_f_star - tangent_dubins_length(s, g, 1.0)) < 1e-6
        assert d.full_word in WORDS
        assert abs(sum(d.segment_lengths) - d.t_f_star) < 1e-12 and min(d.segment_lengths) >= 0


def test_dubins_rejects_nonpositive_bound():
    with pytest.raises(ValueError):
        dubins_solve(OrientedPoint(0, 0, 0), OrientedPoint(1, 0, 0), 0.0)


def test_crosscheck_non_converse():
    check = md_crosscheck(ex1(2.0))
    assert check.passed and not check.skipped
    assert abs(check.t_f_star - 1.0) < 1e-9 and check.t_f == 2.0
    assert any("converse" in n for n in check.notes)


def test_crosscheck_example_3b():
    inst = ex3(1.3)
    check = md_crosscheck(inst, report=solved(inst))
    assert check.passed and check.dubins_word == "RLR"
    assert abs(check.t_f_star - ORACLE_TF_3B) < 1e-9
    assert abs(check.a_resolved - check.a_star) < 1e-6


def test_crosscheck_trivial_is_skipped():
    check = md_crosscheck(ex1(1.0))
    assert check.passed and check.skipped and check.notes


def test_transcription_trivial():
    tr = transcription_solve(ex1(1.0), 64)
    assert tr.a <= 1e-6 and np.max(np.abs(tr.controls)) <= 1e-6 and tr.bands == "S"


def test_transcription_example_1a():
    tr = transcription_solve(ex1(1.5), 400)
    assert abs(tr.a - 3.9887508486) / 3.9887508486 < 1e-3
    assert tr.bands == "RLR"
    assert np.all(np.abs(tr.controls) <= tr.a + 1e-9)
    assert tr.feasibility <= 1e-8


def test_transcription_input_checks():
    with pytest.raises(ValueError):
        transcription_solve(ex1(1.5), 8)
    with pytest.raises(InfeasibleInstanceError):
        transcription_solve(ex1(0.5), 64)


def test_control_bands():
    w = np.r_[np.ones(10), 0.9, np.zeros(10), -0.2, -np.ones(10)]
    assert control_bands(w) == "LSR"
    # one-cell switching artefacts are ignored
    assert control_bands(np.r_[np.ones(10), -1.0, np.ones(10)]) == "L"


def test_expected_bands_draw_loops_as_turns():
    best = solved(ex2(PI / 3)).best
    assert best.type_string == "LO" and best.xi[1] > 6  # right-turning loop
    assert expected_bands(best.program, ex2(PI / 3).tf, 400) == "LR"
    assert expected_bands(solved(ex3(0.8)).best.program, 0.8, 400) == "LSR"
