"""Asymptotic formulas for the hot and cold atom regimes and peak analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .core import (
    MazerParams,
    dressed_arrays,
    is_blocked,
    kappa_n,
    wavenumber_arrays,
)
from .errors import SingularKernel
from .mesa import _denominator_factors, _singular_mask, k_c, k_t

# validity thresholds for the cold-regime formulas
COLD_DETUNING_RATIO = 0.2  # |delta| / Omega_n
COLD_MIN_KAPPA_N_L = 5.0  # exp(kappa_n L) >> 1
COLD_LENGTH_FACTOR = 1.0  # kappa_n L < factor * (kappa_n / k)**2


@dataclass(frozen=True)
class ColdValidity:
    """Which of the cold-regime assumptions hold for a parameter point."""

    small_detuning: bool
    long_cavity: bool
    short_transit: bool

    @property
    def ok(self) -> bool:
        return self.small_detuning and self.long_cavity and self.short_transit


@dataclass(frozen=True)
class ColdApprox:
    value: float
    validity: ColdValidity


@dataclass(frozen=True)
class PeakReport:
    positions_kappa_L: List[float]
    amplitude: float
    finesse: float
    de_broglie_kappa: float
    detuning_over_g: float = field(default=0.0)


def transit_phase(params: MazerParams) -> float:
    """g*tau for the classical transit time tau = m L / (hbar k)."""
    return 0.5 * params.kappa_L / params.k_over_kappa


def rabi_arrays(n, delta_over_g, g_tau):
    omega2 = 4.0 * (np.asarray(n, dtype=float) + 1.0)
    d2 = np.asarray(delta_over_g, dtype=float) ** 2
    return np.sin(0.5 * np.asarray(g_tau) * np.sqrt(omega2 + d2)) ** 2 / (1.0 + d2 / omega2)


def rabi_emission(n: int, delta_over_g: float, params: MazerParams) -> float:
    """Detuned Rabi emission probability for the transit time set by ``params``."""
    return float(rabi_arrays(n, delta_over_g, transit_phase(params)))


def _cold_validity(n, k, d, L):
    kn = kappa_n(n)
    omega = 2.0 * math.sqrt(n + 1.0)
    return ColdValidity(
        small_detuning=abs(d) / omega < COLD_DETUNING_RATIO,
        long_cavity=kn * L > COLD_MIN_KAPPA_N_L,
        short_transit=kn * L < COLD_LENGTH_FACTOR * (kn / k) ** 2,
    )


def step_factor_arrays(n, k, delta_over_g, kappa_L):
    """B(L): flux factor over the squared moduli of the two shared denominator factors.

    Returns ``(B, singular)``; blocked points give B = 0.
    """
    n, k, d, L = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                       for x in (n, k, delta_over_g, kappa_L)))
    _, _, _, _, cos_t, _, _ = dressed_arrays(n, d)
    kb, kp, km = wavenumber_arrays(n, k, d)
    with np.errstate(all="ignore"):
        fc, ft = _denominator_factors(cos_t ** 2, k, kb, k_c(kp, km, k, kb, L),
                                      k_t(kp, km, k, kb, L))
        B = kb.real / k / (np.abs(fc) ** 2 * np.abs(ft) ** 2)
        bad = _singular_mask(k, kb, kp, km, L) | ~np.isfinite(B)
    blocked = is_blocked(k, d)
    return np.where(blocked, 0.0, B), bad & ~blocked


def cold_arrays(n, k, delta_over_g, kappa_L):
    """Vectorised cold-regime approximation with the B(L) factor."""
    _, _, _, _, _, _, cot = dressed_arrays(n, delta_over_g)
    kn = kappa_n(n)
    B, bad = step_factor_arrays(n, k, delta_over_g, kappa_L)
    x = kn * np.sqrt(cot) * np.asarray(kappa_L, dtype=float)
    num = 1.0 + 0.5 * cot * np.sin(2.0 * x)
    den = 1.0 + (kn / (2.0 * np.asarray(k))) ** 2 * cot * np.sin(x) ** 2
    return 0.5 * B * num / den, bad


def cold_emission_approx(params: MazerParams) -> ColdApprox:
    """Cold-regime emission probability, with validity flags for its assumptions."""
    p = params
    value, bad = cold_arrays(p.n, p.k_over_kappa, p.delta_over_g, p.kappa_L)
    if bool(bad):
        raise SingularKernel(f"kernel denominator vanishes at {params}")
    return ColdApprox(float(value), _cold_validity(p.n, p.k_over_kappa, p.delta_over_g, p.kappa_L))


def cold_fit_arrays(n, k, delta_over_g, kappa_L):
    _, _, _, _, _, _, cot = dressed_arrays(n, delta_over_g)
    kn = kappa_n(n)
    k = np.asarray(k, dtype=float)
    d = np.asarray(delta_over_g, dtype=float)
    blocked = is_blocked(k, d)
    with np.errstate(invalid="ignore"):
        kb = np.sqrt(np.where(blocked, 0.0, k * k - d))
    ratio = kb / k
    x = kn * np.sqrt(cot) * np.asarray(kappa_L, dtype=float)
    val = (2.0 * ratio / (1.0 + ratio) ** 2 * (1.0 + 0.5 * np.sin(2.0 * x))
           / (1.0 + (kn / (kb + k)) ** 2 * np.sin(x) ** 2))
    return np.where(blocked, 0.0, val)


def cold_emission_fit(params: MazerParams) -> float:
    """Airy-like fit of the cold-regime emission probability; zero when blocked."""
    return float(cold_fit_arrays(params.n, params.k_over_kappa, params.delta_over_g, params.kappa_L))


def peak_positions(n: int, delta_over_g: float, m_max: int) -> List[float]:
    """kappa*L values where kappa_n sqrt(cot theta_n) L = m pi, m = 1..m_max."""
    _, _, _, _, _, _, cot = dressed_arrays(n, delta_over_g)
    step = math.pi / (kappa_n(n) * math.sqrt(float(cot)))
    return [m * step for m in range(1, m_max + 1)]


def peak_amplitude(k_over_kappa: float, delta_over_g: float) -> float:
    """Peak height: one half times the step transmission factor 4 (k_b/k) / (1 + k_b/k)**2."""
    if is_blocked(k_over_kappa, delta_over_g):
        return 0.0
    r = math.sqrt(k_over_kappa ** 2 - delta_over_g) / k_over_kappa
    # 4r/(1+r)**2 written as 1 - ((1-r)/(1+r))**2 so it never exceeds 1 by rounding
    return 0.5 * (1.0 - ((1.0 - r) / (1.0 + r)) ** 2)


def finesse(n: int, k_over_kappa: float, delta_over_g: float) -> float:
    """(kappa_n / (k_b + k))**2, with k_b taken as 0 when the lower channel is closed."""
    kb = math.sqrt(max(k_over_kappa ** 2 - delta_over_g, 0.0))
    return (kappa_n(n) / (kb + k_over_kappa)) ** 2


def peak_report(n: int, delta_over_g: float, k_over_kappa: float, m_max: int) -> PeakReport:
    _, _, _, _, _, _, cot = dressed_arrays(n, delta_over_g)
    return PeakReport(
        positions_kappa_L=peak_positions(n, delta_over_g, m_max),
        amplitude=peak_amplitude(k_over_kappa, delta_over_g),
        finesse=finesse(n, k_over_kappa, delta_over_g),
        de_broglie_kappa=2.0 * math.pi / (kappa_n(n) * math.sqrt(float(cot))),
        detuning_over_g=delta_over_g,
    )


def cold_detuning_bounds(n: int, k_over_kappa: float):
    """Detuning window (lower, upper) in which a cold atom still emits.

    Below the lower bound V+_n drops under the kinetic energy; at or above the
    upper bound the lower-state channel is closed.
    """
    lower = -math.sqrt(n + 1.0) * (kappa_n(n) / k_over_kappa) ** 2
    return lower, k_over_kappa ** 2


def locate_maxima(f, lo: float, hi: float, step: float = 0.01):
    """Local maxima of a scalar function on [lo, hi].

    Grid maxima at spacing ``step`` refined by golden-section search on the
    bracketing cells. ``f`` must accept numpy arrays.
    """
    x = np.arange(lo, hi + 0.5 * step, step)
    y = np.asarray(f(x), dtype=float)
    out = []
    for i in range(1, len(x) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            xm, val = _golden_max(f, x[i - 1], x[i + 1])
            out.append((xm, val))
    return out


def _golden_max(f, a, b, tol=1e-9):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = float(f(c)), float(f(d))
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = float(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = float(f(d))
    xm = 0.5 * (a + b)
    return xm, float(f(xm))
