"""Problem instances, residuals of the six-variable arc program, and type strings."""

from __future__ import annotations

import cmath
import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    PATTERN,
    ArcProgram,
    OrientedPoint,
    _dsinc,
    _sinc,
    propagate_program,
)

TWO_PI = 2.0 * math.pi


class ClassificationError(ValueError):
    """Cleaned type string is outside the admissible family."""


@dataclass(frozen=True)
class ProblemInstance:
    start: OrientedPoint
    goal: OrientedPoint
    tf: float

    def __post_init__(self):
        if not (math.isfinite(self.tf) and self.tf > 0):
            raise ValueError(f"total length must be positive and finite, got {self.tf}")

    @classmethod
    def from_values(cls, x0, y0, theta0, xf, yf, thetaf, tf) -> "ProblemInstance":
        return cls(OrientedPoint(x0, y0, theta0), OrientedPoint(xf, yf, thetaf), tf)

    @property
    def distance(self) -> float:
        return math.hypot(self.goal.x - self.start.x, self.goal.y - self.start.y)

    def with_length(self, tf: float) -> "ProblemInstance":
        return ProblemInstance(self.start, self.goal, tf)

    def transformed(self, angle: float, dx: float = 0.0, dy: float = 0.0) -> "ProblemInstance":
        """Rotate about the origin by ``angle`` then translate by (dx, dy)."""
        rot = cmath.exp(1j * angle)
        shift = complex(dx, dy)

        def move(p: OrientedPoint) -> OrientedPoint:
            z = p.z * rot + shift
            return OrientedPoint(z.real, z.imag, p.theta + angle)

        return ProblemInstance(move(self.start), move(self.goal), self.tf)

    def reflected(self) -> "ProblemInstance":
        """Mirror the goal about the line through the start along its heading."""
        s = self.start
        axis = cmath.exp(1j * s.theta)
        w = (self.goal.z - s.z) / axis
        z = s.z + w.conjugate() * axis
        goal = OrientedPoint(z.real, z.imag, 2.0 * s.theta - self.goal.theta)
        return ProblemInstance(s, goal, self.tf)


@dataclass(frozen=True)
class Residuals:
    pos_x: float
    pos_y: float
    sin_gap: float
    cos_gap: float
    length_gap: float

    def as_array(self) -> np.ndarray:
        return np.array([self.pos_x, self.pos_y, self.sin_gap, self.cos_gap, self.length_gap])

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


def residuals(inst: ProblemInstance, prog: ArcProgram) -> Residuals:
    end = propagate_program(inst.start, prog)
    g = inst.goal
    return Residuals(
        end.x - g.x,
        end.y - g.y,
        math.sin(g.theta) - math.sin(end.theta),
        math.cos(g.theta) - math.cos(end.theta),
        prog.length - inst.tf,
    )


def residual_jacobian(inst: ProblemInstance, vec) -> tuple[np.ndarray, np.ndarray]:
    """Residual vector and its 5x6 Jacobian at ``vec = (xi_1..xi_5, a)``.

    Same quantities as :func:`residuals`; the derivatives are exact (this is
    :func:`chain_jet` unrolled for the fixed pattern, it sits in the solver's
    inner loop).
    """
    xi = [float(v) for v in vec[:5]]
    a = float(vec[5])
    rates = [v * a for v in PATTERN]
    z = inst.start.z
    th = inst.start.theta
    e = cmath.exp(1j * th)
    joints = []
    own = []
    heads = []
    for l, k in zip(xi, rates):
        h = 0.5 * k * l
        eh = cmath.exp(1j * h)
        s = _sinc(h)
        ee = e * eh
        z += l * ee * s
        own.append(l * l * ee * (0.5j * s + 0.5 * _dsinc(h)))
        e = ee * eh
        th += 2.0 * h
        joints.append(z)
        heads.append(e)
    g = inst.goal
    s5, c5 = math.sin(th), math.cos(th)
    d_len = [heads[j] + 1j * rates[j] * (z - joints[j]) for j in range(5)]
    d_a = sum(v * (own[j] + 1j * xi[j] * (z - joints[j])) for j, v in enumerate(PATTERN))
    dth_a = xi[0] - xi[1] + xi[3] - xi[4]
    r = np.array(
        [
            z.real - g.x,
            z.imag - g.y,
            math.sin(g.theta) - s5,
            math.cos(g.theta) - c5,
            math.fsum(xi) - inst.tf,
        ]
    )
    jac = np.array(
        [
            [d.real for d in d_len] + [d_a.real],
            [d.imag for d in d_len] + [d_a.imag],
            [-c5 * k for k in rates] + [-c5 * dth_a],
            [s5 * k for k in rates] + [s5 * dth_a],
            [1.0, 1.0, 1.0, 1.0, 1.0, 0.0],
        ]
    )
    return r, jac


class Screen(enum.Enum):
    INFEASIBLE = "infeasible"
    TRIVIAL = "trivial-straight-line"
    GENERAL = "general"


@dataclass(frozen=True)
class ScreenResult:
    kind: Screen
    program: ArcProgram | None = None
    reason: str = ""


def feasibility_screen(inst: ProblemInstance, tol: float = 1e-12) -> ScreenResult:
    d = inst.distance
    scale = max(1.0, inst.tf)
    if inst.tf < d - tol * scale:
        return ScreenResult(Screen.INFEASIBLE, reason=f"length {inst.tf} is shorter than the distance {d}")
    if inst.tf <= d + tol * scale:
        bearing = math.atan2(inst.goal.y - inst.start.y, inst.goal.x - inst.start.x)
        aligned = all(
            abs(math.sin(t) - math.sin(bearing)) <= 1e-9 and abs(math.cos(t) - math.cos(bearing)) <= 1e-9
            for t in (inst.start.theta, inst.goal.theta)
        )
        if aligned and d > 0:
            return ScreenResult(Screen.TRIVIAL, ArcProgram((0.0, 0.0, inst.tf, 0.0, 0.0), 0.0))
        return ScreenResult(Screen.INFEASIBLE, reason="length equals the distance but the tangents are not collinear")
    return ScreenResult(Screen.GENERAL)


# Substrings of C X C (X in C, S, O) and of S O S, with C in {L, R}.
_FAMILY = re.compile(r"^(?:[LR]?[LRSO]?[LR]?|S?OS?)$")


def in_family(type_string: str) -> bool:
    if not type_string or not _FAMILY.match(type_string):
        return False
    # an X = C in the middle must turn the other way from its neighbours
    # (equal letters would have been merged), so "LLR" style strings never occur
    return all(p != q for p, q in zip(type_string, type_string[1:]))


@dataclass(frozen=True)
class Piece:
    """A maximal run of one kind in a cleaned program."""

    letter: str  # L, R, S or O
    control: int
    length: float
    slots: tuple[int, ...] = field(default=())


def pieces(prog: ArcProgram, zero_tol: float) -> list[Piece]:
    """Drop near-zero arcs, merge equal neighbours and mark full loops as O."""
    runs: list[list] = []
    last_loop = False
    for j, (v, x) in enumerate(zip(PATTERN, prog.xi)):
        if x < zero_tol:
            continue
        # a slot holding exactly one turn stays its own piece
        loop = v != 0 and abs(prog.a * x - TWO_PI) < prog.a * zero_tol
        if runs and runs[-1][0] == v and loop == last_loop:
            runs[-1][1] += x
            runs[-1][2].append(j)
        else:
            runs.append([v, x, [j]])
        last_loop = loop
    out = []
    for v, x, slots in runs:
        letter = "S" if v == 0 else ("L" if v > 0 else "R")
        if v != 0 and abs(prog.a * x - TWO_PI) < prog.a * zero_tol:
            letter = "O"
        out.append(Piece(letter, v, x, tuple(slots)))
    return out


def type_string_of(prog: ArcProgram, zero_tol: float) -> str:
    return "".join(p.letter for p in pieces(prog, zero_tol))


def classify(prog: ArcProgram, inst: ProblemInstance | None = None, zero_tol: float | None = None) -> str:
    if zero_tol is None:
        zero_tol = 1e-6 * (inst.tf if inst is not None else prog.length or 1.0)
    ts = type_string_of(prog, zero_tol)
    if not in_family(ts):
        raise ClassificationError(f"type {ts!r} is not an admissible minimax-curvature type")
    return ts


def swap_letters(type_string: str) -> str:
    return type_string.translate(str.maketrans("LR", "RL"))


def _embed(seq: list[tuple[int, float]]) -> tuple[float, ...] | None:
    """Place (control, length) runs into the L R S L R slots, earliest first."""
    xi = [0.0] * 5
    slot = 0
    for v, x in seq:
        while slot < 5 and PATTERN[slot] != v:
            slot += 1
        if slot == 5:
            return None
        xi[slot] = x
        slot += 1
    return tuple(xi)


def reflect_program(prog: ArcProgram) -> ArcProgram:
    """Mirror image of the curve, written again in the L R S L R pattern.

    Turning directions flip and the order of pieces is kept.  Zero-length
    slots are ignored, so any curve with at most one arc of each of the two
    C-pairs, or any admissible type, has a representable mirror.
    """
    seq = [(-v, x) for v, x in zip(PATTERN, prog.xi) if x > 0.0]
    merged: list[list] = []
    for v, x in seq:
        if merged and merged[-1][0] == v:
            merged[-1][1] += x
        else:
            merged.append([v, x])
    xi = _embed([(v, x) for v, x in merged])
    if xi is None:
        raise ValueError("mirror image of this program does not fit the L R S L R pattern")
    return ArcProgram(xi, prog.a)


def canonicalize_loops(prog: ArcProgram, zero_tol: float) -> ArcProgram:
    """Move a loop sitting between two like-turning arcs to the end of the curve.

    A lone arc longer than a full turn is split the same way (arc, then loop).

    The loop can sit anywhere on the arc without changing endpoints or
    curvature; pinning it to the end gives one representative per family.
    """
    ps = pieces(prog, zero_tol)
    letters = "".join(p.letter for p in ps)
    if len(ps) == 1 and ps[0].control != 0 and prog.a * ps[0].length > TWO_PI + prog.a * zero_tol:
        # a single arc turning past a full circle is an arc followed by a loop
        loop = TWO_PI / prog.a
        xi = _embed([(ps[0].control, ps[0].length - loop), (ps[0].control, loop)])
        return prog if xi is None else ArcProgram(xi, prog.a)
    if len(ps) != 3 or letters[1] != "O" or ps[0].control != ps[2].control or ps[0].control == 0:
        return prog
    arc = ps[0].length + ps[2].length
    loop = ps[1].length
    xi = _embed([(ps[0].control, arc), (ps[1].control, loop)])
    if xi is None:
        return prog
    return ArcProgram(xi, prog.a)


def program_distance(p: ArcProgram, q: ArcProgram) -> float:
    return float(np.max(np.abs(p.as_vector() - q.as_vector())))
