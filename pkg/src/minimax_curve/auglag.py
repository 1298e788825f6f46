"""Bound-constrained augmented Lagrangian with a projected quasi-Newton inner solver.

Small dense problems only.  The inner model Hessian is split the usual way
for penalty functions: ``mu * J^T J`` is formed exactly from the constraint
Jacobian and only the curvature of the Lagrangian is learned by a damped
BFGS update.  The exact part carries the stiffness that grows with the
penalty, so the quasi-Newton part stays well scaled across outer iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]
Constraints = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass
class ALResult:
    x: np.ndarray
    multipliers: np.ndarray
    feasibility: float
    stationarity: float
    converged: bool
    outer_iterations: int
    inner_iterations: int
    penalty: float
    message: str
    history: list[float] = field(default_factory=list)
    objective_history: list[float] = field(default_factory=list)


def projected_gradient(x, g, lower, upper) -> np.ndarray:
    return x - np.clip(x - g, lower, upper)


def _damped_bfgs(A: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Powell-damped BFGS update; keeps ``A`` positive definite."""
    As = A @ s
    sAs = float(s @ As)
    if sAs <= 0.0:
        return A
    sy = float(s @ y)
    if sy < 0.2 * sAs:
        t = 0.8 * sAs / (sAs - sy)
        y = t * y + (1.0 - t) * As
        sy = float(s @ y)
    A = A - np.outer(As, As) / sAs + np.outer(y, y) / sy
    return 0.5 * (A + A.T)


def _solve_spd(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        d = np.linalg.solve(H, rhs)
        if float(d @ rhs) > 0.0:
            return d
    except np.linalg.LinAlgError:
        pass
    # lost definiteness to rounding: clamp the spectrum
    w, V = np.linalg.eigh(0.5 * (H + H.T))
    w = np.maximum(w, 1e-10 * max(1.0, float(np.max(np.abs(w)))))
    return V @ ((V.T @ rhs) / w)


def minimize_al(
    objective: Objective,
    constraints: Constraints,
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    *,
    feas_tol: float = 1e-9,
    opt_tol: float = 1e-9,
    max_outer: int = 60,
    max_inner: int = 200,
    penalty_growth: float = 10.0,
    penalty0: float = 10.0,
    max_penalty: float = 1e12,
    feasibility: Callable[[np.ndarray], float] | None = None,
    max_step: np.ndarray | Callable[[np.ndarray], np.ndarray] | None = None,
) -> ALResult:
    """Minimize objective(x) subject to constraints(x) = 0 and lower <= x <= upper.

    ``max_step`` bounds each component of a trial step (a vector, or a
    function of the current point returning one).
    """
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    n = x.size
    f, gf = objective(x)
    c, J = constraints(x)
    lam = np.zeros(c.size)
    mu = penalty0
    omega = 1.0 / mu
    eta = 1.0 / mu**0.1
    A = np.eye(n)
    inner_total = 0
    history: list[float] = []
    obj_history: list[float] = []

    def merit(f_, c_):
        return f_ + lam @ c_ + 0.5 * mu * (c_ @ c_)

    def inner(x, f, gf, c, J, tol):
        nonlocal A
        its = 0
        flat = 0
        psi = merit(f, c)
        for its in range(1, max_inner + 1):
            w = lam + mu * c
            g = gf + J.T @ w
            pg = projected_gradient(x, g, lower, upper)
            pg_norm = float(np.max(np.abs(pg)))
            if pg_norm <= tol:
                return x, f, gf, c, J, its - 1
            eps = min(1e-3, pg_norm)
            pinned = ((x <= lower + eps) & (g > 0)) | ((x >= upper - eps) & (g < 0))
            free = ~pinned
            H = mu * (J.T @ J) + A
            if not pinned.any():
                d = -_solve_spd(H, g)
            else:
                d = np.zeros(n)
                if free.any():
                    d[free] = -_solve_spd(H[free][:, free], g[free])
                d[pinned] = -g[pinned] / np.maximum(np.diag(H)[pinned], 1e-12)
            if max_step is not None:
                cap = max_step(x) if callable(max_step) else max_step
                ratio = float(np.max(np.abs(d) / cap))
                if ratio > 1.0:
                    d /= ratio
            step = 1.0
            halvings = 0
            for halvings in range(30):
                xn = np.clip(x + step * d, lower, upper)
                fn, gfn = objective(xn)
                cn, Jn = constraints(xn)
                psin = merit(fn, cn)
                if np.isfinite(psin) and psin <= psi + 1e-4 * float(g @ (xn - x)):
                    break
                step *= 0.5
            else:
                return x, f, gf, c, J, its
            s = xn - x
            wn = lam + mu * cn
            if halvings >= 4:
                # the learned curvature misled the step: start it over
                A = np.eye(n)
            elif float(s @ s) > 0:
                # curvature of the Lagrangian part only; mu * J^T J is exact
                A = _damped_bfgs(A, s, (gfn - gf) + (Jn - J).T @ wn)
            flat = flat + 1 if psi - psin <= 1e-13 * (1.0 + abs(psi)) else 0
            x, f, gf, c, J, psi = xn, fn, gfn, cn, Jn, psin
            if flat >= 3:
                break
        return x, f, gf, c, J, its

    feas = np.inf
    stat = np.inf
    stalled = 0
    message = "outer iteration limit"
    outer = 0
    for outer in range(1, max_outer + 1):
        x, f, gf, c, J, n_in = inner(x, f, gf, c, J, max(omega, 0.1 * opt_tol))
        inner_total += n_in
        cnorm = float(np.max(np.abs(c)))
        feas = feasibility(x) if feasibility is not None else float(np.linalg.norm(c))
        history.append(feas)
        obj_history.append(f)
        if cnorm <= eta or feas <= feas_tol:
            lam = lam + mu * c
            stat = float(np.max(np.abs(projected_gradient(x, gf + J.T @ lam, lower, upper))))
            if feas <= feas_tol and stat <= opt_tol:
                return ALResult(x, lam, feas, stat, True, outer, inner_total, mu, "converged", history, obj_history)
            eta = max(eta / mu**0.9, 0.1 * feas_tol)
            omega = max(omega / mu, 0.1 * opt_tol)
        else:
            # penalty growth no longer buys feasibility: infeasible stationary point
            if len(history) > 1 and history[-1] > 0.9 * history[-2]:
                stalled += 1
            else:
                stalled = 0
            if mu >= max_penalty or stalled >= 3:
                message = "penalty no longer reduces infeasibility"
                break
            mu = min(mu * penalty_growth, max_penalty)
            eta = 1.0 / mu**0.1
            omega = 1.0 / mu
    stat = float(np.max(np.abs(projected_gradient(x, gf + J.T @ lam, lower, upper))))
    return ALResult(x, lam, feas, stat, False, outer, inner_total, mu, message, history, obj_history)
