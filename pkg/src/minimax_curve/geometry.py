"""Closed-form propagation of unit-speed curves built from circular arcs and lines.

A segment of length ``l`` turning at constant rate ``k`` (signed curvature)
starting at heading ``theta`` displaces the point by

    dz = l * exp(i*theta) * exp(i*k*l/2) * sinc(k*l/2)

which is the usual ``(sin(theta') - sin(theta)) / k`` formula rewritten with
half angles.  The rewritten form has no cancellation as ``k -> 0`` and reduces
to the straight-line displacement exactly at ``k = 0``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Control pattern L R S L R used by every arc program.
PATTERN = (1, -1, 0, 1, -1)
LETTERS = ("L", "R", "S", "L", "R")


class InputError(ValueError):
    """Non-finite or otherwise malformed geometric input."""


class DegenerateArcError(ValueError):
    """A turning segment was asked to turn with zero curvature bound."""


@dataclass(frozen=True)
class OrientedPoint:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.theta)):
            raise InputError(f"non-finite oriented point {self!r}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def same_pose(self, other: "OrientedPoint", tol: float = 1e-9) -> bool:
        """Compare positions and headings, the latter through (sin, cos)."""
        return (
            abs(self.x - other.x) <= tol
            and abs(self.y - other.y) <= tol
            and abs(math.sin(self.theta) - math.sin(other.theta)) <= tol
            and abs(math.cos(self.theta) - math.cos(other.theta)) <= tol
        )


@dataclass(frozen=True)
class ArcSegment:
    control: int
    curvature_bound: float
    xi: float

    def __post_init__(self):
        if self.control not in (-1, 0, 1):
            raise InputError(f"control must be -1, 0 or +1, got {self.control}")
        if not (math.isfinite(self.curvature_bound) and math.isfinite(self.xi)):
            raise InputError("non-finite arc segment")
        if self.xi < 0 or self.curvature_bound < 0:
            raise InputError("arc duration and curvature bound must be nonnegative")

    @property
    def rate(self) -> float:
        return self.control * self.curvature_bound


@dataclass(frozen=True)
class ArcProgram:
    """Five arc lengths for the pattern L R S L R plus the shared curvature bound."""

    xi: tuple[float, float, float, float, float]
    a: float

    def __post_init__(self):
        xi = tuple(float(v) for v in self.xi)
        if len(xi) != 5:
            raise InputError("an arc program has exactly five arc lengths")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "a", float(self.a))
        if not all(math.isfinite(v) for v in xi + (self.a,)):
            raise InputError("non-finite arc program")
        if min(xi) < 0 or self.a < 0:
            raise InputError("arc lengths and curvature bound must be nonnegative")

    @property
    def length(self) -> float:
        return math.fsum(self.xi)

    def segments(self) -> list[ArcSegment]:
        return [ArcSegment(v, self.a, x) for v, x in zip(PATTERN, self.xi)]

    def as_vector(self) -> np.ndarray:
        return np.array(self.xi + (self.a,))

    @classmethod
    def from_vector(cls, vec) -> "ArcProgram":
        vec = [float(v) for v in vec]
        return cls(tuple(max(v, 0.0) for v in vec[:5]), max(vec[5], 0.0))


def _sinc(x: float) -> float:
    return 1.0 if x == 0.0 else math.sin(x) / x


def _dsinc(x: float) -> float:
    if abs(x) < 0.1:
        x2 = x * x
        return x * (-1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (-1.0 / 840.0 + x2 / 45360.0)))
    return (x * math.cos(x) - math.sin(x)) / (x * x)


def chord(phi: float) -> complex:
    """(exp(i*phi) - 1) / (i*phi), the unit-length chord of a turn by phi."""
    return cmath.exp(0.5j * phi) * _sinc(0.5 * phi)


def chord_derivative(phi: float) -> complex:
    h = 0.5 * phi
    return cmath.exp(1j * h) * (0.5j * _sinc(h) + 0.5 * _dsinc(h))


def propagate_arc(p: OrientedPoint, seg: ArcSegment) -> OrientedPoint:
    if seg.control != 0 and seg.curvature_bound == 0.0 and seg.xi > 0:
        raise DegenerateArcError("turning segment with zero curvature bound")
    if seg.xi == 0.0:
        return p
    phi = seg.rate * seg.xi
    dz = seg.xi * cmath.exp(1j * p.theta) * chord(phi)
    return OrientedPoint(p.x + dz.real, p.y + dz.imag, p.theta + phi)


def propagate_program(p0: OrientedPoint, prog: ArcProgram) -> OrientedPoint:
    p = p0
    for seg in prog.segments():
        p = propagate_arc(p, seg)
    return p


def point_at(p0: OrientedPoint, prog: ArcProgram, t: float) -> OrientedPoint:
    """Exact pose after arc length ``t`` along the program (clamped to its length)."""
    p = p0
    remaining = max(t, 0.0)
    for seg in prog.segments():
        if remaining <= 0.0:
            break
        step = min(seg.xi, remaining)
        p = propagate_arc(p, ArcSegment(seg.control, seg.curvature_bound, step))
        remaining -= step
    return p


def sample_program(p0: OrientedPoint, prog: ArcProgram, n: int) -> list[OrientedPoint]:
    if n < 2:
        raise InputError("need at least two samples")
    total = prog.length
    pts = [point_at(p0, prog, total * k / (n - 1)) for k in range(n - 1)]
    pts.append(propagate_program(p0, prog))
    return pts


def controls_at(prog: ArcProgram, ts: Sequence[float]) -> list[float]:
    """Signed curvature u(t) at each parameter value (right-continuous)."""
    bounds = np.cumsum(prog.xi)
    out = []
    for t in ts:
        j = int(np.searchsorted(bounds, t, side="right"))
        j = min(j, 4)
        # skip zero-length segments sitting exactly at t
        while j < 4 and prog.xi[j] == 0.0:
            j += 1
        out.append(PATTERN[j] * prog.a)
    return out


@dataclass(frozen=True)
class ChainJet:
    """Endpoint of a chain of constant-curvature segments and its first derivatives."""

    end: complex
    theta: float
    d_length: list[complex]  # d end / d l_k
    d_rate: list[complex]  # d end / d k_k
    theta_d_length: list[float]
    theta_d_rate: list[float]


def chain_jet(z0: complex, theta0: float, lengths: Sequence[float], rates: Sequence[float]) -> ChainJet:
    """Propagate a segment chain and differentiate the endpoint.

    Lengthening segment k adds its exit tangent and rotates the rest of the
    chain about the segment's end point; changing its rate bends the segment
    itself and rotates the rest by ``l_k`` per unit rate.
    """
    n = len(lengths)
    joints = [z0]
    heads = [theta0]
    own = []
    z, th = z0, theta0
    for l, k in zip(lengths, rates):
        phi = k * l
        e = cmath.exp(1j * th)
        z = z + l * e * chord(phi)
        own.append(l * l * e * chord_derivative(phi))
        th = th + phi
        joints.append(z)
        heads.append(th)
    d_len = []
    d_rate = []
    for j in range(n):
        tail = z - joints[j + 1]
        d_len.append(cmath.exp(1j * heads[j + 1]) + 1j * rates[j] * tail)
        d_rate.append(own[j] + 1j * lengths[j] * tail)
    return ChainJet(z, th, d_len, d_rate, list(rates), list(lengths))


def chain_jet_vec(z0: complex, theta0: float, lengths: np.ndarray, rates: np.ndarray):
    """Vectorized :func:`chain_jet` for long chains (returns numpy arrays)."""
    lengths = np.asarray(lengths, dtype=float)
    rates = np.asarray(rates, dtype=float)
    phi = rates * lengths
    heads = theta0 + np.concatenate(([0.0], np.cumsum(phi)))
    h = 0.5 * phi
    s = np.sinc(h / np.pi)
    small = np.abs(h) < 0.1
    hs = np.where(small, 1.0, h)
    ds = np.where(
        small,
        h * (-1.0 / 3.0 + h**2 * (1.0 / 30.0 + h**2 * (-1.0 / 840.0 + h**2 / 45360.0))),
        (hs * np.cos(hs) - np.sin(hs)) / hs**2,
    )
    e_half = np.exp(1j * h)
    e_start = np.exp(1j * heads[:-1])
    steps = lengths * e_start * e_half * s
    joints = z0 + np.concatenate(([0.0], np.cumsum(steps)))
    end = joints[-1]
    tail = end - joints[1:]
    own = lengths**2 * e_start * e_half * (0.5j * s + 0.5 * ds)
    d_len = np.exp(1j * heads[1:]) + 1j * rates * tail
    d_rate = own + 1j * lengths * tail
    return end, heads[-1], d_len, d_rate, joints, heads
