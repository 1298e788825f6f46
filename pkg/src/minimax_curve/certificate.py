"""Maximum-principle certificates and the loop optimality filters.

Along a candidate the switching function obeys

    |lambda3(t)| = (rho * cos(theta(t) - phi) + a - h) / a      on turning arcs
    lambda3(t)   = 0                                            on straight pieces
    d lambda3/dt = rho * sin(theta(t) - phi)

and its absolute value integrates to t_f.  With p = rho cos(phi),
q = rho sin(phi) and c = a - h every one of these conditions is linear in
(p, q, c), so the multipliers come from a 3-column least-squares problem.
The switching function is then rebuilt a second time by integrating its
derivative from t = 0 only, and the sign law, the zeros at switches and the
phase-plane ellipse identity are checked on that independent copy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ArcProgram, OrientedPoint, point_at, propagate_program
from .model import ProblemInstance, pieces, residuals

TWO_PI = 2.0 * math.pi
CERT_TOL = 1e-7


@dataclass
class CertificateFlags:
    mp_consistent: bool | None
    ellipse_consistent: bool | None
    filters_passed: bool | None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mp_consistent": self.mp_consistent,
            "ellipse_consistent": self.ellipse_consistent,
            "filters_passed": self.filters_passed,
            "notes": list(self.notes),
        }


@dataclass
class Certificate:
    rho: float
    phi: float
    h: float
    lambda3: np.ndarray  # (n, 2): sample times and values
    flags: CertificateFlags
    ellipse_residual: float = float("nan")
    integral_residual: float = float("nan")

    def to_dict(self) -> dict:
        return {"rho": self.rho, "phi": self.phi, "h": self.h, "flags": self.flags.to_dict()}


@dataclass(frozen=True)
class FilterVerdict:
    passed: bool
    reasons: tuple[str, ...] = ()


@dataclass(frozen=True)
class _Run:
    letter: str
    v: int
    t0: float
    length: float
    theta0: float


def _runs(start: OrientedPoint, prog: ArcProgram, zero_tol: float) -> list[_Run]:
    out = []
    t = 0.0
    for pc in pieces(prog, zero_tol):
        # heading at the start of the run, including any dropped slivers before it
        theta0 = point_at(start, prog, t).theta
        out.append(_Run(pc.letter, pc.control, t, pc.length, theta0))
        t += pc.length
    return out


def _bang_integrals(run: _Run, a: float) -> tuple[float, float]:
    """Integrals of cos(theta) and sin(theta) over a turning run."""
    w = run.v * a
    th0 = run.theta0
    th1 = th0 + w * run.length
    return (math.sin(th1) - math.sin(th0)) / w, (math.cos(th0) - math.cos(th1)) / w


def _rows(runs: list[_Run], a: float, tf: float):
    rows, rhs, kinds = [], [], []
    for k, run in enumerate(runs):
        if run.v == 0 or run.letter == "O":
            # straight run, or a loop whose switching function touches zero
            # tangentially where it starts: lambda3 and its derivative vanish
            th = run.theta0
            rows += [[math.cos(th), math.sin(th), 1.0], [math.sin(th), -math.cos(th), 0.0]]
            rhs += [0.0, 0.0]
            kinds += [f"zero at {run.letter}{k}", f"flat at {run.letter}{k}"]
        if k > 0 and run.v != 0 and runs[k - 1].v != 0:
            th = run.theta0
            rows.append([math.cos(th), math.sin(th), 1.0])
            rhs.append(0.0)
            kinds.append(f"switch before {run.letter}{k}")
    ic = is_ = tb = 0.0
    for run in runs:
        if run.v != 0:
            c_, s_ = _bang_integrals(run, a)
            ic += c_
            is_ += s_
            tb += run.length
    rows.append([ic, is_, tb])
    rhs.append(a * tf)
    kinds.append("integral of |lambda3|")
    return np.array(rows), np.array(rhs), kinds


def _interior_headings(runs: list[_Run], a: float, per_run: int = 64) -> list[float]:
    out = []
    for run in runs:
        if run.v == 0:
            continue
        for j in range(1, per_run):
            out.append(run.theta0 + run.v * a * run.length * j / per_run)
    return out


def _pick_multipliers(A: np.ndarray, b: np.ndarray, runs: list[_Run], a: float) -> np.ndarray:
    """Least squares; when the rows leave freedom, the member with |lambda3| most positive."""
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.matrix_rank(A) == 3:
        return x
    from scipy.optimize import linprog

    heads = _interior_headings(runs, a)
    if not heads:
        return x
    # variables (p, q, c, m): maximise m subject to p cos + q sin + c >= m at interior headings
    big = 10.0 * (float(np.max(np.abs(x))) + a + 1.0)
    A_ub = np.array([[-math.cos(t), -math.sin(t), -1.0, 1.0] for t in heads])
    b_ub = np.zeros(len(heads))
    A_eq = np.hstack([A, np.zeros((A.shape[0], 1))])
    res = linprog(
        c=[0.0, 0.0, 0.0, -1.0],
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b,
        bounds=[(-big, big)] * 3 + [(None, big)],
        method="highs",
    )
    return res.x[:3] if res.success else x


class _Switching:
    """lambda3 rebuilt by integrating its derivative from t = 0."""

    def __init__(self, runs: list[_Run], a: float, rho: float, phi: float, c: float):
        self.runs, self.a, self.rho, self.phi, self.c = runs, a, rho, phi, c
        first = runs[0]
        lam = 0.0 if first.v == 0 else -first.v * (rho * math.cos(first.theta0 - phi) + c) / a
        self.start_values = []
        for run in runs:
            self.start_values.append(lam)
            lam = self._advance(run, lam, run.length)
        self.end_value = lam

    def _advance(self, run: _Run, lam0: float, s: float) -> float:
        if run.v == 0:
            return lam0 + self.rho * s * math.sin(run.theta0 - self.phi)
        w = run.v * self.a
        return lam0 + self.rho / w * (math.cos(run.theta0 - self.phi) - math.cos(run.theta0 + w * s - self.phi))

    def integral_abs(self) -> float:
        """Closed-form integral of -v * lambda3 over turning runs (= integral of |lambda3|)."""
        total = 0.0
        for run, lam0 in zip(self.runs, self.start_values):
            if run.v == 0:
                continue
            w = run.v * self.a
            d0 = run.theta0 - self.phi
            ell = run.length
            integral = lam0 * ell + self.rho / w * (math.cos(d0) * ell - (math.sin(d0 + w * ell) - math.sin(d0)) / w)
            total += -run.v * integral
        return total

    def sample(self, t: float):
        """(lambda3, its derivative, the run it falls in, distance to the run's ends)."""
        for k, run in enumerate(self.runs):
            if t <= run.t0 + run.length or k == len(self.runs) - 1:
                s = min(max(t - run.t0, 0.0), run.length)
                lam = self._advance(run, self.start_values[k], s)
                theta = run.theta0 + run.v * self.a * s
                return lam, self.rho * math.sin(theta - self.phi), run, min(s, run.length - s)
        raise AssertionError("unreachable")


def reconstruct_certificate(inst: ProblemInstance, sol, n_samples: int = 1000, zero_tol: float | None = None) -> Certificate:
    """Recover (rho, phi, h) for a candidate and test the necessary conditions."""
    prog: ArcProgram = sol.program if hasattr(sol, "program") else sol
    a = prog.a
    verdict = apply_optimality_filters(inst, sol, zero_tol)
    if a == 0.0:
        flags = CertificateFlags(None, None, verdict.passed, ["a = 0, Remark 1 case"])
        return Certificate(0.0, 0.0, 0.0, np.zeros((0, 2)), flags)
    zero_tol = zero_tol if zero_tol is not None else 1e-6 * inst.tf
    notes: list[str] = []
    runs = _runs(inst.start, prog, zero_tol)
    A, b, kinds = _rows(runs, a, inst.tf)
    p, q, c = _pick_multipliers(A, b, runs, a)
    rho = math.hypot(p, q)
    phi = math.atan2(q, p)
    h = a - c
    scale = max(1.0, a, rho, abs(c))
    row_res = np.abs(A @ np.array([p, q, c]) - b) / scale
    ok_rows = bool(np.all(row_res <= CERT_TOL))
    if not ok_rows:
        worst = int(np.argmax(row_res))
        notes.append(f"multiplier system inconsistent at '{kinds[worst]}' ({row_res[worst]:.2e})")

    rnorm = residuals(inst, prog).norm()
    feasible = rnorm <= CERT_TOL
    if not feasible:
        notes.append(f"endpoint residual {rnorm:.2e}")

    sw = _Switching(runs, a, rho, phi, c)
    ts = np.linspace(0.0, prog.length, n_samples)
    values = np.empty((n_samples, 2))
    sign_ok = zeros_ok = True
    ell_worst = 0.0
    edge = 1e-9 * max(1.0, inst.tf)
    for i, t in enumerate(ts):
        lam, dlam, run, gap = sw.sample(float(t))
        values[i] = (t, lam)
        if run.v == 0:
            if abs(lam) > CERT_TOL:
                zeros_ok = False
        elif (gap > edge or t <= edge or t >= prog.length - edge) and -run.v * lam < -CERT_TOL:
            # only the internal switches are exempt; the curve's own ends are not
            sign_ok = False
        ell = dlam * dlam + (a * abs(lam) - a + h) ** 2 - rho * rho
        ell_worst = max(ell_worst, abs(ell))
    for k in range(1, len(runs)):
        if runs[k].v != 0 and runs[k - 1].v != 0 and abs(sw.start_values[k]) > CERT_TOL:
            zeros_ok = False
            notes.append(f"lambda3 = {sw.start_values[k]:.2e} at switch {k}")
    if not sign_ok:
        notes.append("lambda3 has the wrong sign inside a turning arc")
    if not zeros_ok and not any(n.startswith("lambda3 =") for n in notes):
        notes.append("lambda3 does not vanish on a straight piece")
    integral_res = abs(sw.integral_abs() - inst.tf)
    if integral_res > CERT_TOL * max(1.0, inst.tf):
        notes.append(f"integral of |lambda3| misses t_f by {integral_res:.2e}")
    for run in runs:
        if run.v == 0 and abs(rho - abs(a - h)) > CERT_TOL * scale:
            notes.append("rho differs from |a - h| on a straight piece")
            ok_rows = False
            break
    mp = bool(ok_rows and feasible and sign_ok and zeros_ok and integral_res <= CERT_TOL * max(1.0, inst.tf))
    ellipse = bool(ell_worst <= CERT_TOL)
    if not ellipse:
        notes.append(f"phase-plane ellipse residual {ell_worst:.2e}")
    notes.extend(verdict.reasons)
    flags = CertificateFlags(mp, ellipse, verdict.passed, notes)
    return Certificate(rho, phi, h, values, flags, ell_worst, integral_res)


def sos_threshold_b(x0: float = 0.1, x1: float = 0.2, tol: float = 1e-14, max_iter: int = 50) -> tuple[float, int]:
    """Root of b = sinc(pi / (2 (1 - b))) by the secant method; returns (b, iterations)."""

    def f(b: float) -> float:
        x = math.pi / (2.0 * (1.0 - b))
        return b - math.sin(x) / x

    f0, f1 = f(x0), f(x1)
    for it in range(1, max_iter + 1):
        x0, x1 = x1, x1 - f1 * (x1 - x0) / (f1 - f0)
        f0, f1 = f1, f(x1)
        if abs(f1) < tol:
            return x1, it
    raise ArithmeticError("secant iteration did not converge")


def _loop_count(prog: ArcProgram, zero_tol: float) -> int:
    n = 0
    for pc in pieces(prog, zero_tol):
        if pc.control != 0:
            n += int((prog.a * pc.length + prog.a * zero_tol) // TWO_PI)
    return n


def apply_optimality_filters(inst: ProblemInstance, sol, zero_tol: float | None = None) -> FilterVerdict:
    """Flag candidates that the loop propositions rule out as global minimisers."""
    prog: ArcProgram = sol.program if hasattr(sol, "program") else sol
    zero_tol = zero_tol if zero_tol is not None else 1e-6 * inst.tf
    a = prog.a
    ps = pieces(prog, zero_tol)
    ts = "".join(p.letter for p in ps)
    reasons = []
    if a > 0 and _loop_count(prog, zero_tol) > 1:
        reasons.append("more than one full loop")
    if "OS" in ts or "SO" in ts:
        b, _ = sos_threshold_b()
        ratio = inst.distance / inst.tf
        if ratio > b:
            reasons.append(f"loop beside a straight piece with d/t_f = {ratio:.6f} > b")
    circ = [p for p in ps if p.control != 0]
    if a > 0 and len(ps) == len(circ) and _loop_count(prog, zero_tol) >= 1:
        if len(ps) == 3 and ps[1].letter == "O" and ps[0].control != ps[2].control:
            reasons.append("loop between arcs turning opposite ways")
        else:
            beta = _coc_angle(inst, prog, ps, zero_tol)
            if beta is not None and beta > math.pi / 2 + 1e-12:
                reasons.append(f"loop on a single arc with beta = {beta:.6f} > pi/2")
    return FilterVerdict(not reasons, tuple(reasons))


def _coc_angle(inst: ProblemInstance, prog: ArcProgram, ps, zero_tol: float) -> float | None:
    """Arc angle beta when the curve is one arc of radius 1/a plus one loop, else None."""
    a = prog.a
    beta = a * inst.tf - TWO_PI
    if beta < -1e-9:
        return None
    # the arc left after removing the loop turns the way the non-loop pieces do
    turning = [p.control for p in ps if p.letter != "O"] or [p.control for p in ps]
    v = turning[0]
    if any(t != v for t in turning):
        return None
    arc = ArcProgram((max(beta, 0.0) / a, 0.0, 0.0, 0.0, 0.0) if v > 0 else (0.0, max(beta, 0.0) / a, 0.0, 0.0, 0.0), a)
    end = propagate_program(inst.start, arc)
    if not end.same_pose(inst.goal, 1e-6 * max(1.0, inst.distance)):
        return None
    return beta
