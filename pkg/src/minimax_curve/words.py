"""Closed-form three-piece paths of fixed curvature between two oriented points.

For a curvature bound ``a`` every word in {LSL, RSR, LSR, RSL, RLR, LRL}
has at most two geometric realisations (two for the CCC words, whose middle
turn is either ``p`` or ``2*pi - p``).  Each candidate is checked by
propagating it; those that miss the goal are discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import ArcProgram, OrientedPoint, propagate_program

TWO_PI = 2.0 * math.pi
WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")

# where each word sits in the L R S L R slot pattern
SLOTS = {
    "LSL": (0, 2, 3),
    "RSR": (1, 2, 4),
    "LSR": (0, 2, 4),
    "RSL": (1, 2, 3),
    "LRL": (0, 1, 3),
    "RLR": (1, 3, 4),
}


@dataclass(frozen=True)
class WordPath:
    word: str
    lengths: tuple[float, float, float]
    a: float
    branch: int = 0

    @property
    def total(self) -> float:
        return math.fsum(self.lengths)

    def program(self) -> ArcProgram:
        xi = [0.0] * 5
        for slot, length in zip(SLOTS[self.word], self.lengths):
            xi[slot] = length
        return ArcProgram(tuple(xi), self.a)


def _mod(x: float) -> float:
    r = x % TWO_PI
    # a turn of 2*pi - 1e-15 is rounding noise on a zero turn
    return 0.0 if TWO_PI - r < 1e-12 else r


def _csc(word: str, alpha: float, beta: float, d: float):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    cab = math.cos(alpha - beta)
    if word == "LSL":
        p2 = 2 + d * d - 2 * cab + 2 * d * (sa - sb)
        if p2 < 0:
            return []
        tmp = math.atan2(cb - ca, d + sa - sb)
        return [(_mod(-alpha + tmp), math.sqrt(p2), _mod(beta - tmp))]
    if word == "RSR":
        p2 = 2 + d * d - 2 * cab + 2 * d * (sb - sa)
        if p2 < 0:
            return []
        tmp = math.atan2(ca - cb, d - sa + sb)
        return [(_mod(alpha - tmp), math.sqrt(p2), _mod(-beta + tmp))]
    if word == "LSR":
        p2 = -2 + d * d + 2 * cab + 2 * d * (sa + sb)
        if p2 < 0:
            return []
        p = math.sqrt(p2)
        tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
        return [(_mod(-alpha + tmp), p, _mod(-_mod(beta) + tmp))]
    # RSL
    p2 = -2 + d * d + 2 * cab - 2 * d * (sa + sb)
    if p2 < 0:
        return []
    p = math.sqrt(p2)
    tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return [(_mod(alpha - tmp), p, _mod(beta - tmp))]


def _ccc(word: str, alpha: float, beta: float, d: float):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), math.cos(beta)
    cab = math.cos(alpha - beta)
    sign = 1.0 if word == "RLR" else -1.0
    c = (6.0 - d * d + 2 * cab + 2 * d * sign * (sa - sb)) / 8.0
    if abs(c) > 1.0:
        return []
    out = []
    base = math.acos(c)
    for p in (_mod(TWO_PI - base), base):
        if word == "RLR":
            t = _mod(alpha - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
            q = _mod(alpha - beta - t + p)
        else:
            t = _mod(-alpha - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
            q = _mod(_mod(beta) - alpha - t + p)
        out.append((t, p, q))
    return out


def word_paths(start: OrientedPoint, goal: OrientedPoint, a: float, words=WORDS, tol: float = 1e-8) -> list[WordPath]:
    """Every realisation of the given words at curvature bound ``a`` that reaches ``goal``."""
    if not a > 0:
        raise ValueError("curvature bound must be positive")
    dx, dy = goal.x - start.x, goal.y - start.y
    d = math.hypot(dx, dy) * a
    phi = math.atan2(dy, dx) if d > 0 else 0.0
    alpha = _mod(start.theta - phi)
    beta = _mod(goal.theta - phi)
    scale = max(1.0, math.hypot(dx, dy))
    out = []
    for word in words:
        cands = _csc(word, alpha, beta, d) if "S" in word else _ccc(word, alpha, beta, d)
        for branch, angles in enumerate(cands):
            lengths = tuple(v / a for v in angles)
            path = WordPath(word, lengths, a, branch)
            end = propagate_program(start, path.program())
            if end.same_pose(goal, tol * scale):
                out.append(path)
    return out
