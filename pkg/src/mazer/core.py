"""Dimensionless parameters, dressed-state geometry and channel wavenumbers.

Units throughout the package: momenta in units of kappa (kappa**2 = 2 m g / hbar),
lengths in units of 1/kappa, frequencies in units of g and energies in units
of hbar*g. With these choices the incident kinetic energy is (k/kappa)**2 and
kappa_n**2 = sqrt(n + 1).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

#: Factor used to turn "much smaller"/"much larger" into a number.
REGIME_FACTOR = 10.0


@dataclass(frozen=True)
class MazerParams:
    """The four numbers that fix one scattering problem.

    n is the photon number of the initial Fock state, k_over_kappa the
    incident momentum, delta_over_g the detuning (cavity minus atom) and
    kappa_L the interaction length.
    """

    n: int
    k_over_kappa: float
    delta_over_g: float
    kappa_L: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")
        if not self.k_over_kappa > 0:
            raise ValueError(f"k_over_kappa must be > 0, got {self.k_over_kappa!r}")
        if not self.kappa_L >= 0:
            raise ValueError(f"kappa_L must be >= 0, got {self.kappa_L!r}")
        if not math.isfinite(self.delta_over_g):
            raise ValueError("delta_over_g must be finite")
        object.__setattr__(self, "n", int(self.n))

    @property
    def kinetic_energy(self) -> float:
        """Incident kinetic energy in units of hbar*g."""
        return self.k_over_kappa ** 2

    @property
    def kappa_n(self) -> float:
        return kappa_n(self.n)

    def replace(self, **changes) -> "MazerParams":
        fields = dict(n=self.n, k_over_kappa=self.k_over_kappa,
                      delta_over_g=self.delta_over_g, kappa_L=self.kappa_L)
        fields.update(changes)
        return MazerParams(**fields)


@dataclass(frozen=True)
class DressedFrame:
    theta_n: float
    omega_n: float
    lambda_n: float
    sin_theta: float
    cos_theta: float
    tan_theta: float
    cot_theta: float


@dataclass(frozen=True)
class ChannelWavenumbers:
    k: float
    k_b: complex
    k_plus: complex
    k_minus: complex
    kappa_n: float

    @property
    def b_propagating(self) -> bool:
        """True when the lower-state channel carries flux (k_b real and > 0)."""
        return self.k_b.imag == 0.0 and self.k_b.real > 0.0


@dataclass(frozen=True)
class StepEnergies:
    v_plus: float
    v_minus: float


class Regime(enum.Enum):
    BLOCKED = "blocked"
    COLD = "cold"
    INTERMEDIATE = "intermediate"
    HOT = "hot"


def kappa_n(n):
    """kappa_n / kappa = (n + 1)**(1/4)."""
    if np.ndim(n):
        return (np.asarray(n, dtype=float) + 1.0) ** 0.25
    return (n + 1.0) ** 0.25


def branch_sqrt(x):
    """Square root of a real (or complex) array on the Re >= 0, Im >= 0 branch.

    Negative reals map to +i*sqrt(|x|), so evanescent waves decay away from the
    cavity and outgoing flux is non-negative.
    """
    z = np.sqrt(np.asarray(x, dtype=complex) + 0j)
    # principal sqrt gives Re >= 0; flip the (rare) Im < 0 case coming from -0j input
    z = np.where(z.imag < 0, -z, z)
    return z if np.ndim(z) else z[()]


def _lambda_split(delta, omega):
    """Return (Lambda + delta, Lambda - delta) without cancellation."""
    lam = np.hypot(delta, omega)
    big = lam + np.abs(delta)
    small = omega ** 2 / big
    plus = np.where(delta >= 0, big, small)
    minus = np.where(delta >= 0, small, big)
    return lam, plus, minus


def dressed_arrays(n, delta_over_g):
    """Vectorised dressed-frame quantities.

    Returns (theta, omega, lambda, sin, cos, tan, cot), each broadcast over the
    inputs. Only the Lambda-based closed forms are used, never arctan(cot 2theta).
    """
    n = np.asarray(n, dtype=float)
    d = np.asarray(delta_over_g, dtype=float)
    omega = 2.0 * np.sqrt(n + 1.0)
    lam, lp, lm = _lambda_split(d, omega)
    sin = np.sqrt(lp / (2.0 * lam))
    cos = np.sqrt(lm / (2.0 * lam))
    tan = lp / omega
    cot = lm / omega
    theta = np.arctan2(sin, cos)
    return theta, omega, lam, sin, cos, tan, cot


def dressed_frame(n: int, delta_over_g: float) -> DressedFrame:
    """Mixing angle theta_n of the dressed states and its companions."""
    if n < 0:
        raise ValueError("n must be >= 0")
    vals = dressed_arrays(n, delta_over_g)
    return DressedFrame(*(float(v) for v in vals))


def wavenumber_arrays(n, k, delta_over_g):
    """Vectorised (k_b, k_plus, k_minus) on the fixed branch, in units of kappa."""
    _, _, _, _, _, tan, cot = dressed_arrays(n, delta_over_g)
    k = np.asarray(k, dtype=float)
    kn2 = np.sqrt(np.asarray(n, dtype=float) + 1.0)
    kb = branch_sqrt(k ** 2 - np.asarray(delta_over_g, dtype=float))
    kp = branch_sqrt(k ** 2 - kn2 * tan)
    km = branch_sqrt(k ** 2 + kn2 * cot)
    return kb, kp, km


def channel_wavenumbers(params: MazerParams) -> ChannelWavenumbers:
    kb, kp, km = wavenumber_arrays(params.n, params.k_over_kappa, params.delta_over_g)
    return ChannelWavenumbers(
        k=float(params.k_over_kappa),
        k_b=complex(kb),
        k_plus=complex(kp),
        k_minus=complex(km),
        kappa_n=float(kappa_n(params.n)),
    )


def step_energies(n: int, delta_over_g: float) -> StepEnergies:
    """Internal energies V+_n and V-_n of the dressed components, in hbar*g."""
    f = dressed_frame(n, delta_over_g)
    root = math.sqrt(n + 1.0)
    return StepEnergies(v_plus=root * f.tan_theta, v_minus=-root * f.cot_theta)


def critical_k_ratio(n: int, delta_over_g: float) -> float:
    """k/kappa_n at which the kinetic energy equals V+_n, i.e. sqrt(tan theta_n).

    Evaluates the quartic root ((L + d)/(L - d))**(1/4) with
    L = sqrt(d**2 + 4(n+1)) in the cancellation-free form.
    """
    omega = 2.0 * math.sqrt(n + 1.0)
    _, lp, lm = _lambda_split(float(delta_over_g), omega)
    return float(np.sqrt(lp / omega) if delta_over_g >= 0 else np.sqrt(omega / lm))


def critical_detuning(n: int, k_over_kappa: float) -> float:
    """Detuning at which a given k/kappa sits on the cold/hot frontier."""
    if not k_over_kappa > 0:
        raise ValueError("k_over_kappa must be > 0")
    x2 = (k_over_kappa / kappa_n(n)) ** 2
    return math.sqrt(n + 1.0) * (x2 - 1.0 / x2)


def is_blocked(k_over_kappa, delta_over_g):
    """Emission is impossible when the kinetic energy does not exceed hbar*delta."""
    k = np.asarray(k_over_kappa, dtype=float)
    d = np.asarray(delta_over_g, dtype=float)
    with np.errstate(invalid="ignore"):
        out = (d > 0) & ((k <= np.sqrt(np.where(d > 0, d, 0.0))) | (k * k - d <= 0))
    return bool(out) if np.ndim(out) == 0 else out


def classify_regime(params: MazerParams) -> Regime:
    """Advisory regime label; never used to gate a computation."""
    if is_blocked(params.k_over_kappa, params.delta_over_g):
        return Regime.BLOCKED
    ratio = params.k_over_kappa / params.kappa_n
    frontier = critical_k_ratio(params.n, params.delta_over_g)
    if ratio <= frontier / REGIME_FACTOR:
        return Regime.COLD
    if ratio >= frontier * REGIME_FACTOR:
        return Regime.HOT
    return Regime.INTERMEDIATE
