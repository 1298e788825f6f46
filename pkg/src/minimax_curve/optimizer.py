"""Local and multistart solution of the six-variable minimax-curvature program.

Variables are (xi_1..xi_5, a) for the arc pattern L R S L R.  The solver works
in scaled units (lengths divided by t_f, curvature multiplied by t_f) so the
same tolerances apply to every instance size.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .auglag import minimize_al, projected_gradient
from .geometry import ArcProgram
from .words import word_paths
from .model import (
    ClassificationError,
    ProblemInstance,
    Screen,
    canonicalize_loops,
    classify,
    feasibility_screen,
    pieces,
    program_distance,
    reflect_program,
    residual_jacobian,
    residuals,
)


class InfeasibleInstanceError(ValueError):
    """No curve of the requested length joins the two oriented points."""


class NoSolutionError(RuntimeError):
    """Every start failed; ``failures`` holds per-start diagnostics."""

    def __init__(self, message: str, failures: list["SolveFailure"]):
        super().__init__(message)
        self.failures = failures


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    max_outer: int = 60
    max_inner: int = 200
    penalty_growth: float = 10.0
    penalty0: float = 100.0
    a_seeds: tuple[float, ...] = (1.0, 4.0)  # multiples of pi / t_f
    n_random: int = 0
    seed: int = 0
    zero_tol: float | None = None  # defaults to 1e-6 * t_f
    a_min: float = 1e-9
    a_max: float | None = None  # defaults to 100 * pi / t_f
    reflect_seeds: bool = True
    certify: bool = True
    # tolerances of the augmented Lagrangian phase that precedes the Newton polish
    coarse_feas_tol: float = 1e-3
    coarse_opt_tol: float = 1e-2

    def __post_init__(self):
        for name in ("feas_tol", "opt_tol", "penalty_growth", "penalty0", "a_min"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.a_max is not None and not self.a_min < self.a_max:
            raise ValueError("a_min must be smaller than a_max")

    def zero_tol_for(self, tf: float) -> float:
        return self.zero_tol if self.zero_tol is not None else 1e-6 * tf

    def a_max_for(self, tf: float) -> float:
        return self.a_max if self.a_max is not None else 100.0 * math.pi / tf

    def to_dict(self) -> dict[str, Any]:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["a_seeds"] = list(self.a_seeds)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SolverConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        if "a_seeds" in known:
            known["a_seeds"] = tuple(float(v) for v in known["a_seeds"])
        return cls(**known)


@dataclass
class Solution:
    program: ArcProgram
    type_string: str
    a: float
    residual_norm: float
    start_id: int
    stationarity: float = 0.0
    multipliers: tuple[float, ...] = ()
    certificate: Any = None
    verdict: Any = None

    @property
    def xi(self) -> tuple[float, ...]:
        return self.program.xi


@dataclass
class SolveFailure:
    start_id: int
    message: str
    feasibility: float
    stationarity: float
    x: tuple[float, ...] = ()


@dataclass
class SolveReport:
    instance: ProblemInstance
    config: SolverConfig
    best: Solution
    critical: list[Solution]
    failures: list[SolveFailure] = field(default_factory=list)
    timing_ms: float = 0.0
    n_starts: int = 0


class _Scaled:
    """The program in scaled variables z = (xi / t_f, a * t_f)."""

    def __init__(self, inst: ProblemInstance, cfg: SolverConfig):
        tf = inst.tf
        self.inst = inst
        self.scale = np.array([tf] * 5 + [1.0 / tf])
        self.rscale = np.array([1.0 / tf, 1.0 / tf, 1.0, 1.0, 1.0 / tf])
        self.lower = np.array([0.0] * 5 + [cfg.a_min * tf])
        self.upper = np.array([np.inf] * 5 + [cfg.a_max_for(tf) * tf])
        self.grad_f = np.array([0.0] * 5 + [1.0])

    @staticmethod
    def step_cap(z) -> np.ndarray:
        # a quarter of the total length per arc, half the current curvature
        return np.array([0.25] * 5 + [max(1.0, 0.5 * z[5])])

    def to_z(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) / self.scale

    def to_x(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.scale

    def objective(self, z):
        return z[5], self.grad_f

    def constraints(self, z):
        r, J = residual_jacobian(self.inst, z * self.scale)
        return r * self.rscale, (J * self.scale) * self.rscale[:, None]

    def feasibility(self, z) -> float:
        r, _ = residual_jacobian(self.inst, z * self.scale)
        return float(np.linalg.norm(r))


def _kkt(sc: _Scaled, z: np.ndarray, free: np.ndarray):
    """Least-squares multipliers and projected Lagrangian gradient at z."""
    c, J = sc.constraints(z)
    lam, *_ = np.linalg.lstsq(J[:, free].T, -sc.grad_f[free], rcond=None)
    g = sc.grad_f + J.T @ lam
    stat = float(np.max(np.abs(projected_gradient(z, g, sc.lower, sc.upper))))
    return lam, g, stat


def _polish(sc: _Scaled, z: np.ndarray, pin_tol: float, max_iter: int = 30):
    """Gauss-Newton on the free variables with near-zero arcs pinned to zero."""
    z = z.copy()
    free = np.ones(6, dtype=bool)
    free[:5] = z[:5] > pin_tol
    z[:5][~free[:5]] = 0.0
    best = None
    for _ in range(max_iter):
        c, J = sc.constraints(z)
        cn = float(np.linalg.norm(c))
        if best is None or cn < best[0]:
            best = (cn, z.copy(), free.copy())
        if cn < 1e-15:
            break
        step, *_ = np.linalg.lstsq(J[:, free], -c, rcond=1e-12)
        zn = z.copy()
        zn[free] += step
        neg = zn[:5] < 0.0
        if neg.any():
            # an arc crossed zero: pin it and take the step again
            zn[:5][neg] = 0.0
            free[:5] &= ~neg
        zn[5] = min(max(zn[5], sc.lower[5]), sc.upper[5])
        if not free.any():
            break
        z = zn
    return best[1], best[2]


def _face_newton(sc: _Scaled, z: np.ndarray, free: np.ndarray, max_iter: int = 60) -> np.ndarray:
    """Levenberg-Marquardt on the residuals with only ``free`` variables moving."""
    z = z.copy()
    nu = 1e-2
    c, J = sc.constraints(z)
    cn = float(c @ c)
    for _ in range(max_iter):
        if cn < 1e-28:
            break
        JF = J[:, free]
        H = JF.T @ JF
        g = JF.T @ c
        damp = np.diag(np.diag(H) + 1e-12)
        for _ in range(20):
            try:
                d = np.linalg.solve(H + nu * damp, -g)
            except np.linalg.LinAlgError:
                nu *= 4.0
                continue
            zn = z.copy()
            zn[free] += d
            zn = np.clip(zn, sc.lower, sc.upper)
            cc, JJ = sc.constraints(zn)
            cnn = float(cc @ cc)
            if cnn < cn:
                z, c, J, cn = zn, cc, JJ, cnn
                nu = max(nu / 5.0, 1e-12)
                break
            nu *= 4.0
        else:
            break
    return z


_PIN_LADDER = (1e-7, 1e-5, 1e-4, 1e-3, 1e-2)


def _finish(inst: ProblemInstance, sc: _Scaled, z0: np.ndarray, cfg: SolverConfig, start_id: int) -> Solution | SolveFailure:
    """Polish a near-critical point and accept it only if it passes the first-order test."""
    zero_tol = cfg.zero_tol_for(inst.tf)
    # arcs the descent has not yet driven to zero are pinned at growing thresholds;
    # the first pinning whose polished point passes the test wins
    best = None
    for pin in _PIN_LADDER:
        pin = max(pin, zero_tol / inst.tf)
        z, free = _polish(sc, z0, pin)
        lam, g, stat = _kkt(sc, z, free)
        prog = ArcProgram.from_vector(sc.to_x(z))
        rnorm = residuals(inst, prog).norm()
        if best is None or (rnorm <= cfg.feas_tol, -stat) > (best[0] <= cfg.feas_tol, -best[1]):
            best = (rnorm, stat, prog, lam)
        if rnorm <= cfg.feas_tol and stat <= cfg.opt_tol:
            break
    rnorm, stat, prog, lam = best
    if not (rnorm <= cfg.feas_tol and stat <= cfg.opt_tol):
        return SolveFailure(
            start_id,
            "not a first-order critical point after polishing",
            rnorm,
            stat,
            tuple(prog.as_vector()),
        )
    try:
        ts = classify(prog, inst, zero_tol)
    except ClassificationError as exc:
        return SolveFailure(start_id, str(exc), rnorm, stat, tuple(prog.as_vector()))
    return Solution(prog, ts, prog.a, rnorm, start_id, stat, tuple(float(v) for v in lam))


def local_solve(inst: ProblemInstance, x0, cfg: SolverConfig | None = None, start_id: int = 0) -> Solution | SolveFailure:
    """Augmented Lagrangian descent followed by an active-set Newton polish."""
    cfg = cfg or SolverConfig()
    sc = _Scaled(inst, cfg)
    z0 = np.clip(sc.to_z(x0), sc.lower, sc.upper)
    def descend(z, penalty0):
        return minimize_al(
            sc.objective,
            sc.constraints,
            z,
            sc.lower,
            sc.upper,
            feas_tol=cfg.coarse_feas_tol,
            opt_tol=cfg.coarse_opt_tol,
            max_outer=cfg.max_outer,
            max_inner=cfg.max_inner,
            penalty_growth=cfg.penalty_growth,
            penalty0=penalty0,
            max_step=sc.step_cap,
        )

    res = descend(z0, cfg.penalty0)
    if res.feasibility > 1e-3:
        # a weak penalty can let the curvature run down to a ~ 0, where the
        # straight curve has no first-order pull towards the goal; restore
        # feasibility near the start first and descend again, stiffer
        z = _face_newton(sc, z0, np.ones(6, dtype=bool), max_iter=200)
        if sc.feasibility(z) <= 1e-2:
            retry = descend(z, 100.0 * cfg.penalty0)
            if retry.feasibility < res.feasibility:
                res = retry
    if res.feasibility > 1e-3:
        return SolveFailure(start_id, f"augmented Lagrangian: {res.message}", res.feasibility, res.stationarity, tuple(sc.to_x(res.x)))
    return _finish(inst, sc, res.x, cfg, start_id)


def face_solve(inst: ProblemInstance, x0, cfg: SolverConfig | None = None, start_id: int = 0) -> Solution | SolveFailure:
    """Root-find the residuals on the face of ``x0`` (its zero arcs stay zero).

    Descent from any start slides off saddle-type critical curves; solving
    the square system of a three-arc face lands on them directly.
    """
    cfg = cfg or SolverConfig()
    sc = _Scaled(inst, cfg)
    z0 = np.clip(sc.to_z(x0), sc.lower, sc.upper)
    free = np.append(z0[:5] > 0.0, True)
    z = _face_newton(sc, z0, free)
    if sc.feasibility(z) > 1e-6:
        return SolveFailure(start_id, "face root-find did not converge", sc.feasibility(z), float("nan"), tuple(sc.to_x(z)))
    return _finish(inst, sc, z, cfg, start_id)


def _edge_path(inst: ProblemInstance, key, a_in: float, a_out: float, steps: int = 40):
    """Last realisation of word/branch ``key`` on the way from ``a_in`` to ``a_out``."""
    found = None
    for _ in range(steps):
        mid = 0.5 * (a_in + a_out)
        hit = [p for p in word_paths(inst.start, inst.goal, mid, words=(key[0],)) if p.branch == key[1]]
        if hit:
            a_in, found = mid, hit[0]
        else:
            a_out = mid
    return found


def word_seeds(inst: ProblemInstance, cfg: SolverConfig, n_grid: int = 160) -> list[np.ndarray]:
    """Starts on three-arc faces from the closed-form word geometry.

    For each word and branch the path length at curvature ``a`` is tabulated
    on a log grid; each crossing of ``t_f`` gives a start that already meets
    the endpoint conditions and misses only the length.
    """
    tf = inst.tf
    grid = [float(a) for a in np.geomspace(0.5, cfg.a_max_for(tf) * tf, n_grid) / tf]
    rows = [{(p.word, p.branch): p for p in word_paths(inst.start, inst.goal, a)} for a in grid]
    tables: dict[tuple[str, int], list] = {}
    for i, row in enumerate(rows):
        for key, path in row.items():
            tables.setdefault(key, []).append(path)
            # a realisation that vanishes between grid points (a CCC word
            # whose circles stop touching) is followed up to where it ends
            for j in (i - 1, i + 1):
                if 0 <= j < len(rows) and key not in rows[j]:
                    edge = _edge_path(inst, key, grid[i], grid[j])
                    if edge is not None:
                        tables[key].append(edge)
    out = []
    for key in sorted(tables):
        paths = sorted(tables[key], key=lambda p: p.a)
        for p, q in zip(paths, paths[1:]):
            if (p.total - tf) * (q.total - tf) <= 0.0:
                near = p if abs(p.total - tf) <= abs(q.total - tf) else q
                out.append(near.program().as_vector())
    return out


def seed_programs(inst: ProblemInstance, cfg: SolverConfig) -> list[np.ndarray]:
    """Deterministic starting points.

    One start per subset of arcs left free (the rest pinned at zero, lengths
    split evenly) and per curvature multiple of pi / t_f, then the mirror
    images, then optional scrambled Sobol points.  Starts describing the
    same curve are kept once.
    """
    tf = inst.tf
    zero_tol = cfg.zero_tol_for(tf)
    out: list[np.ndarray] = []
    seen: set = set()

    def add(xi, a):
        prog = ArcProgram(tuple(xi), a)
        key = tuple((p.letter, round(p.length / tf, 9)) for p in pieces(prog, zero_tol)) + (round(a * tf, 9),)
        if key in seen:
            return
        seen.add(key)
        out.append(np.array(list(xi) + [a]))

    base = []
    for r in range(1, 6):
        for keep in itertools.combinations(range(5), r):
            xi = [tf / r if j in keep else 0.0 for j in range(5)]
            for m in cfg.a_seeds:
                base.append((xi, m * math.pi / tf))
    for xi, a in base:
        add(xi, a)
    if cfg.reflect_seeds:
        for xi, a in base:
            try:
                mirrored = reflect_program(ArcProgram(tuple(xi), a))
            except ValueError:
                continue
            add(mirrored.xi, a)
    if cfg.n_random:
        from scipy.stats import qmc

        pts = qmc.Sobol(6, scramble=True, seed=cfg.seed).random(cfg.n_random)
        for p in pts:
            w = -np.log(np.clip(p[:5], 1e-12, 1.0))
            xi = tf * w / w.sum()
            a = math.pi / tf * 2.0 ** (3.0 * p[5])
            add(xi, a)
    return out


def _canonical(prog: ArcProgram, zero_tol: float, inst: ProblemInstance, feas_tol: float) -> ArcProgram:
    # the mirror of the mirror is the same curve written in the earliest slots
    # (it merges an arc with an adjoining loop, so loops are split off after);
    # a rewrite that drops slivers is kept only if it still meets the goal
    limit = max(residuals(inst, prog).norm(), feas_tol)
    cleaned = ArcProgram(tuple(x if x >= zero_tol else 0.0 for x in prog.xi), prog.a)
    for cand in (cleaned, prog):
        try:
            out = canonicalize_loops(reflect_program(reflect_program(cand)), zero_tol)
        except ValueError:
            continue
        if residuals(inst, out).norm() <= limit:
            return out
    return prog


_RANK = {"R": 0, "L": 1, "O": 2, "S": 3}


def _preference(sol: Solution, zero_tol: float) -> tuple:
    """Order among curves of equal curvature (mirror images, moved loops).

    Loop-bearing types first; then piece by piece R before L before a loop
    before S, a loop turning against its neighbouring arc before one turning
    with it, and a left loop before a right one.
    """
    ps = pieces(sol.program, zero_tol)
    key = []
    for i, p in enumerate(ps):
        if p.letter == "O":
            near = [q.control for q in ps[max(i - 1, 0) : i + 2] if q is not p and q.letter in "LR"]
            key.append((_RANK["O"], any(c == p.control for c in near), -p.control))
        else:
            key.append((_RANK[p.letter], False, 0))
    return ("O" not in sol.type_string, key, sol.start_id)


def _select(solutions: list[Solution], zero_tol: float, inst: ProblemInstance, feas_tol: float = 1e-9) -> list[Solution]:
    distinct: list[Solution] = []
    for sol in sorted(solutions, key=lambda s: s.start_id):
        canon = _canonical(sol.program, zero_tol, inst, feas_tol)
        sol = replace(sol, program=canon, type_string=classify(canon, inst, zero_tol))
        if any(program_distance(sol.program, d.program) <= 10 * zero_tol for d in distinct):
            continue
        distinct.append(sol)
    tie = 1e-8
    distinct.sort(key=lambda s: (s.a, s.start_id))
    # group equal curvatures, order each group by preference
    ordered: list[Solution] = []
    i = 0
    while i < len(distinct):
        j = i
        while j + 1 < len(distinct) and distinct[j + 1].a - distinct[i].a <= tie * max(1.0, distinct[i].a):
            j += 1
        ordered.extend(sorted(distinct[i : j + 1], key=lambda s: _preference(s, zero_tol)))
        i = j + 1
    return ordered


def _worker_count() -> int:
    env = os.environ.get("MINIMAX_CURVE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def multistart_solve(inst: ProblemInstance, cfg: SolverConfig | None = None) -> SolveReport:
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    screen = feasibility_screen(inst)
    if screen.kind is Screen.INFEASIBLE:
        raise InfeasibleInstanceError(screen.reason)
    if screen.kind is Screen.TRIVIAL:
        prog = screen.program
        sol = Solution(prog, "S", 0.0, residuals(inst, prog).norm(), start_id=-1)
        if cfg.certify:
            from .certificate import apply_optimality_filters, reconstruct_certificate

            sol.certificate = reconstruct_certificate(inst, sol)
            sol.verdict = apply_optimality_filters(inst, sol)
        return SolveReport(inst, cfg, sol, [sol], [], (time.perf_counter() - t0) * 1e3, 0)

    seeds = seed_programs(inst, cfg)
    faces = word_seeds(inst, cfg)
    jobs = [(local_solve, x0) for x0 in seeds] + [(face_solve, x0) for x0 in faces]
    workers = min(_worker_count(), len(jobs))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(fn, inst, x0, cfg, k) for k, (fn, x0) in enumerate(jobs)]
            results = [f.result() for f in futures]
    else:
        results = [fn(inst, x0, cfg, k) for k, (fn, x0) in enumerate(jobs)]
    found = [r for r in results if isinstance(r, Solution)]
    failures = [r for r in results if isinstance(r, SolveFailure)]
    if not found:
        raise NoSolutionError(f"no start converged for {inst}", failures)
    zero_tol = cfg.zero_tol_for(inst.tf)
    critical = _select(found, zero_tol, inst, cfg.feas_tol)
    if cfg.certify:
        from .certificate import apply_optimality_filters, reconstruct_certificate

        for sol in critical:
            sol.certificate = reconstruct_certificate(inst, sol)
            sol.verdict = apply_optimality_filters(inst, sol)
    return SolveReport(inst, cfg, critical[0], critical, failures, (time.perf_counter() - t0) * 1e3, len(jobs))


@dataclass
class SweepEntry:
    tf: float
    report: SolveReport | None
    error: str = ""
    infeasible: bool = False


def sweep_tf(start, goal, tf_values, cfg: SolverConfig | None = None) -> list[SweepEntry]:
    tf_values = list(tf_values)
    if any(b < a for a, b in zip(tf_values, tf_values[1:])):
        raise ValueError("t_f values must be ascending")
    out = []
    for tf in tf_values:
        inst = ProblemInstance(start, goal, tf)
        try:
            out.append(SweepEntry(tf, multistart_solve(inst, cfg)))
        except InfeasibleInstanceError as exc:
            out.append(SweepEntry(tf, None, str(exc), infeasible=True))
        except NoSolutionError as exc:
            out.append(SweepEntry(tf, None, str(exc)))
    return out
