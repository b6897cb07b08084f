"""Derivative-free tuning of the four-coefficient control ansatz.

The objective is the average gate error of a NOT built from
Ansatz(alpha, beta, gamma, delta0) controls; any subset of the four
coefficients can be frozen, mirroring the different correction families
(in-phase only, detuning, quadrature, constant offset).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fidelity import gate_error, ideal_not
from .model import SystemSpec
from .propagator import TimeGrid, propagate
from .pulses import Ansatz, GaussianParams, build_controls

__all__ = ["OptimizeTask", "OptimizeResult", "optimize"]

_PARAM_NAMES = ("alpha", "beta", "gamma", "delta0")


@dataclass(frozen=True)
class OptimizeTask:
    """One optimization problem over the ansatz coefficients.

    ``mask`` selects which of (alpha, beta, gamma, delta0) are free; the
    rest stay at their initial values.  ``prop_tol`` sets the step-doubling
    tolerance on the objective used to fix the integration grid.
    """

    spec: SystemSpec
    params: GaussianParams
    mask: tuple[bool, bool, bool, bool]
    x0: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    tol: float = 1e-10
    max_evals: int = 400
    n_restarts: int = 3
    seed: int = 0
    prop_tol: float = 1e-9

    def __post_init__(self):
        if len(self.mask) != 4 or len(self.x0) != 4:
            raise ValueError("mask and x0 must have four entries")
        if not any(self.mask):
            raise ValueError("at least one parameter must be free")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class OptimizeResult:
    x: tuple[float, float, float, float]
    gate_error: float
    n_evals: int
    converged: bool
    n_steps: int


def _resolve_steps(task: OptimizeTask) -> int:
    """Double the step count until the objective itself is converged.

    The integrator is second order, so requiring successive unitaries to
    agree to prop_tol element-wise would need millions of steps; the gate
    error converges at the same rate with a far smaller constant, and all
    simplex comparisons share whatever grid is chosen here.
    """
    spec, params = task.spec, task.params
    uid = ideal_not(spec.d, spec.qubit_rows)
    cs = build_controls(spec, Ansatz(*task.x0), params)
    n = 256
    prev = gate_error(propagate(spec, cs, TimeGrid(params.t_g, n)), uid,
                      spec.qubit_rows)
    while n < (1 << 20):
        n *= 2
        cur = gate_error(propagate(spec, cs, TimeGrid(params.t_g, n)), uid,
                         spec.qubit_rows)
        if abs(cur - prev) < task.prop_tol:
            return n
        prev = cur
    return n


def optimize(task: OptimizeTask) -> OptimizeResult:
    """Nelder-Mead descent over the free coefficients with fixed restarts.

    Returns the best point ever evaluated, so the result never exceeds the
    objective at the initial point.  Restart perturbations draw from a
    seeded generator; identical tasks give identical results.
    """
    spec, params = task.spec, task.params
    uid = ideal_not(spec.d, spec.qubit_rows)
    n_steps = _resolve_steps(task)
    grid = TimeGrid(params.t_g, n_steps)
    free = [i for i in range(4) if task.mask[i]]
    x_fixed = np.asarray(task.x0, dtype=float)
    evals = 0

    def objective(z: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        x = x_fixed.copy()
        x[free] = z
        try:
            cs = build_controls(spec, Ansatz(*x), params)
            u = propagate(spec, cs, grid)
            e = gate_error(u, uid, spec.qubit_rows)
        except (ValueError, FloatingPointError):
            return math.inf
        return e if math.isfinite(e) else math.inf

    rng = np.random.default_rng(task.seed)
    best_x = x_fixed[free].copy()
    best_f = objective(best_x)
    converged = False

    for restart in range(task.n_restarts + 1):
        if restart == 0:
            start = best_x.copy()
        else:
            scale = np.where(np.abs(best_x) > 0, 0.05 * np.abs(best_x), 0.05)
            start = best_x + rng.normal(0.0, 1.0, len(free)) * scale
        xs, fs, ok = _nelder_mead(objective, start, task.tol,
                                  lambda: evals >= task.max_evals)
        converged = converged or ok
        if fs < best_f:
            best_x, best_f = xs, fs
        if evals >= task.max_evals:
            break

    x_out = x_fixed.copy()
    x_out[free] = best_x
    return OptimizeResult(tuple(float(v) for v in x_out), float(best_f),
                          evals, converged, n_steps)


def _nelder_mead(f, x0: np.ndarray, tol: float, out_of_budget,
                 alpha=1.0, gamma=2.0, rho=0.5, shrink=0.5):
    """Standard reflect/expand/contract/shrink simplex descent."""
    m = len(x0)
    simplex = [np.asarray(x0, dtype=float)]
    for i in range(m):
        v = simplex[0].copy()
        v[i] += 0.05 * max(abs(v[i]), 1.0)
        simplex.append(v)
    values = [f(v) for v in simplex]

    while not out_of_budget():
        order = np.argsort(values)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        diam = max(np.max(np.abs(v - simplex[0])) for v in simplex[1:])
        if diam < tol:
            return simplex[0], values[0], True

        centroid = np.mean(simplex[:-1], axis=0)
        xr = centroid + alpha * (centroid - simplex[-1])
        fr = f(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            xe = centroid + gamma * (centroid - simplex[-1])
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        xc = centroid + rho * (simplex[-1] - centroid)
        fc = f(xc)
        if fc < values[-1]:
            simplex[-1], values[-1] = xc, fc
            continue
        for i in range(1, m + 1):
            simplex[i] = simplex[0] + shrink * (simplex[i] - simplex[0])
            values[i] = f(simplex[i])

    k = int(np.argmin(values))
    return simplex[k], values[k], False
