"""Envelope synthesis and the family of leakage-correcting control sets.

Every control set built here has the parametric structure

    omega_x(t) = a1 * G(t) + a3 * G(t)**3 / delta2**2
    omega_y(t) = b1 * dG/dt / delta2
    delta(t)   = c2 * G(t)**2 / delta2 + c0

with G the truncated Gaussian envelope, which keeps all first derivatives
and the accumulated detuning phase in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.special import erf

from .model import SystemSpec, Topology

__all__ = [
    "GaussianParams",
    "GaussianEnvelope",
    "gaussian",
    "DragVariant",
    "Ansatz",
    "ControlSet",
    "build_controls",
    "build_controls_intermediate",
    "build_controls_star",
    "controls_for",
    "effective_lambda",
    "phase_ramp",
    "controls_to_csv",
    "first_order_coefficients",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianParams:
    """Area (radians), standard deviation and gate time of one envelope."""

    area: float
    sigma: float
    t_g: float

    def __post_init__(self):
        if not (self.t_g > 0 and self.sigma > 0):
            raise ValueError("sigma and t_g must be positive")
        if not math.isfinite(self.area):
            raise ValueError("area must be finite")

    @classmethod
    def for_not(cls, sigma: float, tg_factor: float = 4.0) -> "GaussianParams":
        """NOT-gate preset: area pi, gate time tg_factor * sigma."""
        return cls(math.pi, sigma, tg_factor * sigma)


class GaussianEnvelope:
    """Pedestal-subtracted Gaussian normalized so its integral equals the area.

    G(t) = A * (exp(-(t - t_g/2)^2 / 2 sigma^2) - p) / Z with
    Z = sqrt(2 pi sigma^2) erf(t_g / sqrt(8) sigma) - t_g * p and
    p the raw Gaussian value at the endpoints, so G(0) = G(t_g) = 0
    and the normalization makes int_0^t_g G dt = A exactly.
    """

    def __init__(self, params: GaussianParams):
        self.params = params
        self._mid = params.t_g / 2.0
        self._s2 = params.sigma ** 2
        self._pedestal = math.exp(-params.t_g ** 2 / (8.0 * self._s2))
        z = (_SQRT2PI * params.sigma
             * math.erf(params.t_g / (math.sqrt(8.0) * params.sigma))
             - params.t_g * self._pedestal)
        self._scale = params.area / z

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        tol = 1e-9 * self.params.t_g
        if np.any(t < -tol) or np.any(t > self.params.t_g + tol):
            bad = t[(t < -tol) | (t > self.params.t_g + tol)]
            raise ValueError(
                f"t={float(np.ravel(bad)[0])} outside [0, {self.params.t_g}]")
        return t

    def _gauss(self, t):
        return np.exp(-((t - self._mid) ** 2) / (2.0 * self._s2))

    def value(self, t):
        t = self._check(t)
        return self._scale * (self._gauss(t) - self._pedestal)

    def d1(self, t):
        t = self._check(t)
        return self._scale * (-(t - self._mid) / self._s2) * self._gauss(t)

    def d2(self, t):
        t = self._check(t)
        x = t - self._mid
        return self._scale * ((x * x) / self._s2 - 1.0) / self._s2 * self._gauss(t)

    def int_value(self, t):
        """Integral of the envelope from 0 to t (closed form)."""
        t = self._check(t)
        s = self.params.sigma
        ig = s * math.sqrt(math.pi / 2.0) * (
            erf((t - self._mid) / (math.sqrt(2.0) * s))
            - erf(-self._mid / (math.sqrt(2.0) * s)))
        return self._scale * (ig - self._pedestal * t)

    def int_value_squared(self, t):
        """Integral of the squared envelope from 0 to t (closed form)."""
        t = self._check(t)
        s = self.params.sigma
        ig = s * math.sqrt(math.pi / 2.0) * (
            erf((t - self._mid) / (math.sqrt(2.0) * s))
            - erf(-self._mid / (math.sqrt(2.0) * s)))
        ig2 = s * math.sqrt(math.pi) / 2.0 * (
            erf((t - self._mid) / s) - erf(-self._mid / s))
        p = self._pedestal
        return self._scale ** 2 * (ig2 - 2.0 * p * ig + p * p * t)


def gaussian(params: GaussianParams, t):
    """Envelope value and analytic time derivative at t (scalar or array)."""
    env = GaussianEnvelope(params)
    return env.value(t), env.d1(t)


class DragVariant(str, Enum):
    GAUSSIAN0 = "gaussian0"
    Z_ONLY1 = "z_only1"
    Y_ONLY1 = "y_only1"
    OPTIMAL1 = "optimal1"
    DRAG1 = "drag1"
    Z_ONLY2 = "z_only2"
    Y_ONLY2 = "y_only2"
    DRAG2 = "drag2"


# second-order variants share the first-order fields of their base variant
_SECOND_ORDER_BASE = {
    DragVariant.Z_ONLY2: DragVariant.Z_ONLY1,
    DragVariant.Y_ONLY2: DragVariant.Y_ONLY1,
    DragVariant.DRAG2: DragVariant.DRAG1,
}


@dataclass(frozen=True)
class Ansatz:
    """Free-coefficient control family: alpha*G, -beta*dG/delta2, gamma*G^2/delta2 + delta0."""

    alpha: float
    beta: float
    gamma: float
    delta0: float = 0.0

    def __post_init__(self):
        for v in (self.alpha, self.beta, self.gamma, self.delta0):
            if not math.isfinite(v):
                raise ValueError("ansatz parameters must be finite")

    @property
    def label(self) -> str:
        return (f"ansatz({self.alpha!r},{self.beta!r},"
                f"{self.gamma!r},{self.delta0!r})")


@dataclass(frozen=True)
class ControlSet:
    """Evaluable control waveforms on [0, t_g] with analytic derivatives.

    ``phi`` is the accumulated detuning angle int_0^t delta(s) ds, available
    in closed form for every set built by this module and consumed by
    :func:`phase_ramp`.
    """

    omega_x: Callable
    omega_y: Callable
    delta: Callable
    domega_x: Callable
    domega_y: Callable
    ddelta: Callable
    t_g: float
    variant: str
    params: dict = field(default_factory=dict)
    phi: Callable | None = None


def _assemble(env: GaussianEnvelope, *, a1: float, a3: float, b1: float,
              c2: float, c0: float, delta2: float, variant: str,
              extra: dict | None = None) -> ControlSet:
    d2sq = delta2 * delta2

    def omega_x(t):
        g = env.value(t)
        return a1 * g + (a3 / d2sq) * g ** 3

    def domega_x(t):
        g = env.value(t)
        return (a1 + 3.0 * (a3 / d2sq) * g * g) * env.d1(t)

    def omega_y(t):
        return (b1 / delta2) * env.d1(t)

    def domega_y(t):
        return (b1 / delta2) * env.d2(t)

    def delta(t):
        g = env.value(t)
        return (c2 / delta2) * g * g + c0

    def ddelta(t):
        return 2.0 * (c2 / delta2) * env.value(t) * env.d1(t)

    def phi(t):
        return (c2 / delta2) * env.int_value_squared(t) + c0 * np.asarray(t, float)

    record = {
        "area": env.params.area, "sigma": env.params.sigma,
        "t_g": env.params.t_g, "a1": a1, "a3": a3, "b1": b1,
        "c2": c2, "c0": c0, "delta2": delta2,
    }
    if extra:
        record.update(extra)
    return ControlSet(omega_x, omega_y, delta, domega_x, domega_y, ddelta,
                      env.params.t_g, variant, record, phi)


def first_order_coefficients(spec: SystemSpec, variant: DragVariant
                             ) -> tuple[float, float]:
    """(b1, c2) of a named variant on the given system.

    b1 scales the derivative quadrature (omega_y = b1 * dG / delta2) and c2
    the quadratic detuning (delta = c2 * G^2 / delta2).  Second-order
    variants return their base first-order fields; the cubic in-phase
    correction is handled separately.

    The ladder closed forms follow the single-leakage derivation; star
    systems substitute the effective single-channel weight lambda-tilde
    (see :func:`effective_lambda`), and intermediate systems combine the
    upper and lower channels:

        S      = lam1^2 - (delta2/delta_-1) * lam_-1^2      (Stark bracket)
        Lam    = sqrt(lam1^2 + (delta2/delta_-1)^2 * lam_-1^2)
        Z-only : b1 = 0,      c2 = S/4
        Y-only : b1 = -S/4,   c2 = 0
        optimal: b1 = -Lam/2, c2 = (S - 2*Lam)/4

    which reduce to the ladder forms when lam_-1 = 0.
    """
    base = _SECOND_ORDER_BASE.get(variant, variant)
    if spec.topology is Topology.LADDER:
        lam1 = spec.lam[1]
        stark, big = lam1 * lam1, lam1
    elif spec.topology is Topology.STAR:
        lt = effective_lambda(spec)
        stark, big = lt * lt, lt
    else:
        lam1 = spec.lam[1]
        lam_m1 = spec.lam[-1]
        r = spec.delta2 / spec.delta[-1]
        stark = lam1 * lam1 - r * lam_m1 * lam_m1
        big = math.sqrt(lam1 * lam1 + r * r * lam_m1 * lam_m1)

    if base is DragVariant.GAUSSIAN0:
        return 0.0, 0.0
    if base is DragVariant.Z_ONLY1:
        return 0.0, stark / 4.0
    if base is DragVariant.Y_ONLY1:
        return -stark / 4.0, 0.0
    if base is DragVariant.OPTIMAL1:
        return -big / 2.0, (stark - 2.0 * big) / 4.0
    if base is DragVariant.DRAG1:
        return -1.0, (stark - 4.0) / 4.0
    raise ValueError(f"no first-order coefficients for {variant}")


def _cubic_coefficient(variant: DragVariant, lam1: float) -> float:
    if variant is DragVariant.Z_ONLY2:
        return lam1 ** 2 / 8.0
    if variant is DragVariant.Y_ONLY2:
        return -lam1 ** 2 * (lam1 ** 2 - 4.0) / 32.0
    if variant is DragVariant.DRAG2:
        return (lam1 ** 2 - 4.0) / 8.0
    return 0.0


def build_controls(spec: SystemSpec, variant, params: GaussianParams) -> ControlSet:
    """Control set for a ladder system, or the free ansatz on any topology."""
    env = GaussianEnvelope(params)
    if isinstance(variant, Ansatz):
        return _assemble(env, a1=variant.alpha, a3=0.0, b1=-variant.beta,
                         c2=variant.gamma, c0=variant.delta0,
                         delta2=spec.delta2, variant=variant.label,
                         extra={"alpha": variant.alpha, "beta": variant.beta,
                                "gamma": variant.gamma, "delta0": variant.delta0})
    variant = DragVariant(variant)
    if spec.topology is not Topology.LADDER:
        raise ValueError(
            f"{variant.value} closed forms assume a ladder; use "
            "build_controls_star or build_controls_intermediate for "
            f"{spec.topology.value} systems")
    b1, c2 = first_order_coefficients(spec, variant)
    a3 = _cubic_coefficient(variant, spec.lam[1])
    return _assemble(env, a1=1.0, a3=a3, b1=b1, c2=c2, c0=0.0,
                     delta2=spec.delta2, variant=variant.value,
                     extra={"lambda1": spec.lam[1]})


_MULTI_LEVEL_VARIANTS = (DragVariant.Z_ONLY1, DragVariant.Y_ONLY1,
                         DragVariant.OPTIMAL1, DragVariant.GAUSSIAN0)


def build_controls_intermediate(spec: SystemSpec, variant,
                                params: GaussianParams) -> ControlSet:
    """First-order control sets for leakage above and below the qubit."""
    if spec.topology is not Topology.INTERMEDIATE:
        raise ValueError("spec is not an intermediate system")
    variant = DragVariant(variant)
    if variant not in _MULTI_LEVEL_VARIANTS:
        raise ValueError(
            f"{variant.value} is not available for intermediate systems "
            "(only gaussian0, z_only1, y_only1, optimal1)")
    b1, c2 = first_order_coefficients(spec, variant)
    return _assemble(GaussianEnvelope(params), a1=1.0, a3=0.0, b1=b1, c2=c2,
                     c0=0.0, delta2=spec.delta2, variant=variant.value,
                     extra={"lambda1": spec.lam[1], "lambda_m1": spec.lam[-1]})


def build_controls_star(spec: SystemSpec, variant,
                        params: GaussianParams) -> ControlSet:
    """First-order control sets for a star system.

    All star channels collapse onto one effective transition of weight
    lambda-tilde, so the waveforms are exactly the ladder ones with
    lam1 -> lambda-tilde.
    """
    if spec.topology is not Topology.STAR:
        raise ValueError("spec is not a star system")
    variant = DragVariant(variant)
    if variant not in _MULTI_LEVEL_VARIANTS:
        raise ValueError(
            f"{variant.value} is not available for star systems "
            "(only gaussian0, z_only1, y_only1, optimal1)")
    b1, c2 = first_order_coefficients(spec, variant)
    return _assemble(GaussianEnvelope(params), a1=1.0, a3=0.0, b1=b1, c2=c2,
                     c0=0.0, delta2=spec.delta2, variant=variant.value,
                     extra={"lambda_tilde": effective_lambda(spec)})


def controls_for(spec: SystemSpec, variant, params: GaussianParams) -> ControlSet:
    """Topology-dispatching builder used by sweeps and the CLI."""
    if isinstance(variant, Ansatz) or spec.topology is Topology.LADDER:
        return build_controls(spec, variant, params)
    if spec.topology is Topology.STAR:
        return build_controls_star(spec, variant, params)
    return build_controls_intermediate(spec, variant, params)


def effective_lambda(spec: SystemSpec) -> float:
    """Single-channel weight of a star system:
    sqrt(sum_k delta2^2 * lam_{k-1}^2 / delta_k^2)."""
    if spec.topology is not Topology.STAR:
        raise ValueError("effective lambda is defined for star systems")
    d2 = spec.delta2
    total = 0.0
    for j in range(2, spec.d):
        total += (d2 * spec.lam[j - 1] / spec.delta[j]) ** 2
    return math.sqrt(total)


def phase_ramp(cs: ControlSet) -> ControlSet:
    """Fold the detuning into a time-dependent drive phase.

    Returns controls with delta identically zero and

        omega_x'(t) = omega_x cos(Phi) - omega_y sin(Phi)
        omega_y'(t) = omega_y cos(Phi) + omega_x sin(Phi)

    where Phi(t) = int_0^t delta(s) ds.  The rotation direction is fixed by
    the sign convention delta(t) = omega(t) - omega_d of the simulated
    Hamiltonian: the ramped drive on a fixed-frequency system reproduces
    the detuned evolution up to the final frame rotation,

        exp(-i Phi(t_g) h_z) U_ramped = U_detuned.
    """
    phi = cs.phi if cs.phi is not None else _numeric_phi(cs)

    def omega_x(t):
        p = phi(t)
        return cs.omega_x(t) * np.cos(p) - cs.omega_y(t) * np.sin(p)

    def omega_y(t):
        p = phi(t)
        return cs.omega_y(t) * np.cos(p) + cs.omega_x(t) * np.sin(p)

    def domega_x(t):
        p, dp = phi(t), cs.delta(t)
        return (cs.domega_x(t) * np.cos(p) - cs.domega_y(t) * np.sin(p)
                - (cs.omega_x(t) * np.sin(p) + cs.omega_y(t) * np.cos(p)) * dp)

    def domega_y(t):
        p, dp = phi(t), cs.delta(t)
        return (cs.domega_y(t) * np.cos(p) + cs.domega_x(t) * np.sin(p)
                + (cs.omega_x(t) * np.cos(p) - cs.omega_y(t) * np.sin(p)) * dp)

    zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return ControlSet(omega_x, omega_y, zero, domega_x, domega_y, zero,
                      cs.t_g, cs.variant + "+ramp",
                      dict(cs.params, total_phase=float(phi(cs.t_g))), zero)


def _numeric_phi(cs: ControlSet, n: int = 1 << 16):
    # composite-Simpson fallback for control sets without a closed-form phase
    ts = np.linspace(0.0, cs.t_g, 2 * n + 1)
    f = np.asarray(cs.delta(ts), dtype=float)
    h = cs.t_g / (2 * n)
    inc = (h / 3.0) * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    cum = np.concatenate(([0.0], np.cumsum(inc)))
    grid = ts[::2]

    def phi(t):
        return np.interp(np.asarray(t, dtype=float), grid, cum)

    return phi


def controls_to_csv(cs: ControlSet, path, n_samples: int = 1001) -> None:
    """Sample the three channels on a uniform grid and write full-precision CSV."""
    ts = np.linspace(0.0, cs.t_g, n_samples)
    ox, oy, dl = cs.omega_x(ts), cs.omega_y(ts), cs.delta(ts)
    with open(path, "w") as fh:
        fh.write("t,omega_x,omega_y,delta\n")
        for row in zip(ts, ox, oy, dl):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
