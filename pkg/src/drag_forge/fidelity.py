"""Average gate fidelity over the six axial qubit states.

The actual process is the full-space unitary channel, so population left in
(or routed through) leakage levels counts as error; there is no qubit-block
renormalization and no phase compensation in the headline number.  A
separate diagnostic reports the error after optimizing a virtual-Z phase on
the qubit block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import proj, sigma_x, sigma_y

__all__ = ["axial_states", "ideal_not", "average_gate_fidelity",
           "gate_error", "phase_optimized_gate_error", "FidelityReport"]


def axial_states(d: int, qubit: tuple[int, int] = (0, 1)) -> list[np.ndarray]:
    """The six axial Bloch states of the qubit block, embedded in d dimensions."""
    if d < 2:
        raise ValueError("d must be >= 2")
    q0, q1 = qubit
    pp = proj(d, q0) + proj(d, q1)
    sx = sigma_x(d, q0, q1)
    sy = sigma_y(d, q0, q1)
    return [
        0.5 * (pp + sx), 0.5 * (pp - sx),
        0.5 * (pp + sy), 0.5 * (pp - sy),
        proj(d, q0), proj(d, q1),
    ]


def ideal_not(d: int, qubit: tuple[int, int] = (0, 1)) -> np.ndarray:
    """NOT on the qubit block, identity on everything else."""
    if d < 2:
        raise ValueError("d must be >= 2")
    q0, q1 = qubit
    u = np.eye(d, dtype=complex)
    u[q0, q0] = u[q1, q1] = 0.0
    u[q0, q1] = u[q1, q0] = 1.0
    return u


def average_gate_fidelity(u_actual: np.ndarray, u_ideal: np.ndarray,
                          qubit: tuple[int, int] = (0, 1)) -> float:
    """(1/6) sum_j Tr[U_ideal rho_j U_ideal^dag  U rho_j U^dag]."""
    u_actual = np.asarray(u_actual)
    u_ideal = np.asarray(u_ideal)
    if u_actual.shape != u_ideal.shape:
        raise ValueError(
            f"dimension mismatch: {u_actual.shape} vs {u_ideal.shape}")
    d = u_actual.shape[0]
    total = 0.0 + 0.0j
    for rho in axial_states(d, qubit):
        ideal = u_ideal @ rho @ u_ideal.conj().T
        actual = u_actual @ rho @ u_actual.conj().T
        total += np.trace(ideal @ actual)
    f = total / 6.0
    assert abs(f.imag) < 1e-12, f"fidelity picked up imaginary part {f.imag}"
    return float(f.real)


def gate_error(u_actual: np.ndarray, u_ideal: np.ndarray,
               qubit: tuple[int, int] = (0, 1)) -> float:
    return 1.0 - average_gate_fidelity(u_actual, u_ideal, qubit)


def phase_optimized_gate_error(u_actual: np.ndarray, u_ideal: np.ndarray,
                               qubit: tuple[int, int] = (0, 1)) -> float:
    """Diagnostic: gate error minimized over a virtual-Z rotation of the
    qubit block.  Excluded from all benchmark numbers."""
    u_actual = np.asarray(u_actual)
    d = u_actual.shape[0]
    q0, q1 = qubit
    zgen = np.zeros(d)
    zgen[q0], zgen[q1] = 0.5, -0.5

    def err(theta):
        rz = np.diag(np.exp(-1j * theta * zgen))
        return gate_error(rz @ u_actual, u_ideal, qubit)

    thetas = np.linspace(0.0, 2.0 * np.pi, 721, endpoint=False)
    coarse = [err(th) for th in thetas]
    k = int(np.argmin(coarse))
    lo, hi = thetas[k] - 2 * np.pi / 720, thetas[k] + 2 * np.pi / 720
    # golden-section refinement
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, dd = b - gr * (b - a), a + gr * (b - a)
    fc, fd = err(c), err(dd)
    for _ in range(60):
        if fc < fd:
            b, dd, fd = dd, c, fc
            c = b - gr * (b - a)
            fc = err(c)
        else:
            a, c, fc = c, dd, fd
            dd = a + gr * (b - a)
            fd = err(dd)
    return min(fc, fd)


@dataclass(frozen=True)
class FidelityReport:
    """One scored gate: fidelity, error and the run metadata."""

    f_gate: float
    gate_error: float
    variant: str
    sigma: float
    t_g: float
    n_steps: int

    def __post_init__(self):
        if not (-1e-12 <= self.f_gate <= 1.0 + 1e-12):
            raise ValueError(f"f_gate {self.f_gate} outside [0, 1]")
