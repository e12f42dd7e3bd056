"""Closed-form scattering amplitudes for the mesa (square) cavity mode.

The amplitudes are assembled from the kernel family below. Every kernel takes
the dressed wavenumbers k_plus, k_minus as complex numbers, so the same
expressions cover propagating and tunnelling dressed components. Everything is
written with numpy ufuncs and broadcasts over parameter arrays; the scalar
entry points wrap the array versions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ChannelWavenumbers,
    MazerParams,
    channel_wavenumbers,
    dressed_arrays,
    is_blocked,
    wavenumber_arrays,
)
from .errors import SingularKernel

#: Relative size below which a kernel denominator counts as zero.
GUARD_EPS = 1e-13


@dataclass(frozen=True)
class ScatteringAmplitudes:
    """rho_a, tau_a (upper state) and rho_b, tau_b (lower state, one photon added)."""

    rho_a: complex
    tau_a: complex
    rho_b: complex
    tau_b: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.rho_a, self.tau_a, self.rho_b, self.tau_b], dtype=complex)


@dataclass(frozen=True)
class ChannelProbabilities:
    r_a: float
    t_a: float
    r_b: float
    t_b: float

    @property
    def total(self) -> float:
        return self.r_a + self.t_a + self.r_b + self.t_b

    @property
    def p_em(self) -> float:
        return self.r_b + self.t_b


# ---------------------------------------------------------------------------
# kernels

def sigma(kq, p):
    """Sigma(p) = (kq/p + p/kq) / 2 for dressed wavenumber kq and exterior momentum p."""
    return 0.5 * (kq / p + p / kq)


def delta_kernel(kq, p):
    return 0.5 * (kq / p - p / kq)


def tau_kernel(kq, p, L):
    """Single-channel barrier transmission [cos(kq L) - i Sigma(p) sin(kq L)]**-1."""
    return 1.0 / (np.cos(kq * L) - 1j * sigma(kq, p) * np.sin(kq * L))


def rho_kernel(kq, p, L):
    return 1j * delta_kernel(kq, p) * np.sin(kq * L) * tau_kernel(kq, p, L)


def tau_prime(kq, k, kb, L):
    return 1.0 / (np.cos(kq * L) - 1j * (kb / k) * sigma(kq, k) * np.sin(kq * L))


def tau_second(kq, k, kb, L):
    return 1.0 / (np.cos(kq * L) - 1j * (k / kb) * sigma(kq, k) * np.sin(kq * L))


def sigma_tilde(kq, k, kb):
    return kq / (k + kb) + kb / (k + kb) * k / kq


def tau_tilde(kq, k, kb, L):
    return 1.0 / (np.cos(kq * L) - 1j * sigma_tilde(kq, k, kb) * np.sin(kq * L))


def tau_bar(kq, k, kb, L):
    return 1.0 / (np.cos(kq * L) - 1j * (k + kb) / (2 * kb) * sigma(kq, k) * np.sin(kq * L))


def s_pm(kp, km, L):
    """S+-_n(L)."""
    sp, sm = np.sin(kp * L), np.sin(km * L)
    return sp * sm * (km / kp + kp / km) + 2.0 * (np.cos(km * L) * np.cos(kp * L) - 1.0)


def u_kernel(kp, km, k, sin_theta, L):
    return (sin_theta ** 2 * s_pm(kp, km, L) / (np.sin(kp * L) * np.sin(km * L))
            + (km * kp / k ** 2 - k ** 2 / (km * kp)))


def v_kernel(kp, km, k, cos_2theta, L):
    sp, sm = np.sin(kp * L), np.sin(km * L)
    cp, cm = np.cos(kp * L), np.cos(km * L)
    return 1j * (kp / k * sp * cm - km / k * sm * cp) - 0.5 * cos_2theta * s_pm(kp, km, L)


def k_c(kp, km, k, kb, L):
    cot_m = 1.0 / np.tan(0.5 * km * L)
    cot_p = 1.0 / np.tan(0.5 * kp * L)
    return 1j * (k + 1j * cot_m * km) * (kb + 1j * cot_p * kp) / (cot_m * km - cot_p * kp)


def k_t(kp, km, k, kb, L):
    tan_m = np.tan(0.5 * km * L)
    tan_p = np.tan(0.5 * kp * L)
    return 1j * (k - 1j * tan_m * km) * (kb - 1j * tan_p * kp) / (tan_p * kp - tan_m * km)


def _denominator_factors(c2, k, kb, kc, kt):
    """The two factors cos^2(theta)(k - k_b)/k^{c,t} - 1 shared by all amplitudes.

    When k == k_b (zero detuning) the correction term is exactly zero, whatever
    k^c and k^t evaluate to.
    """
    same = (k - kb) == 0
    with np.errstate(all="ignore"):
        fc = np.where(same, -1.0 + 0j, c2 * (k - kb) / kc - 1.0)
        ft = np.where(same, -1.0 + 0j, c2 * (k - kb) / kt - 1.0)
    return fc, ft


# ---------------------------------------------------------------------------
# guards

def _small(value, scale):
    return np.abs(value) <= GUARD_EPS * np.abs(scale)


def _singular_mask(k, kb, kp, km, L):
    mask = _small(kp, k) | _small(km, k) | _small(kb, k)
    with np.errstate(all="ignore"):
        for kq in (kp, km):
            s, c = np.sin(kq * L), np.cos(kq * L)
            mask |= _small(s, np.abs(s) + np.abs(c))
            s, c = np.sin(0.5 * kq * L), np.cos(0.5 * kq * L)
            mask |= _small(s, np.abs(s) + np.abs(c)) | _small(c, np.abs(s) + np.abs(c))
        cot_m = 1.0 / np.tan(0.5 * km * L)
        cot_p = 1.0 / np.tan(0.5 * kp * L)
        tan_m = np.tan(0.5 * km * L)
        tan_p = np.tan(0.5 * kp * L)
        mask |= _small(cot_m * km - cot_p * kp, np.abs(cot_m * km) + np.abs(cot_p * kp))
        mask |= _small(tan_p * kp - tan_m * km, np.abs(tan_p * kp) + np.abs(tan_m * km))
        mask |= _small(delta_kernel(kp, kb), np.abs(kp / kb) + np.abs(kb / kp))
        mask |= _small(delta_kernel(km, k), np.abs(km / k) + np.abs(k / km))
    return mask


# ---------------------------------------------------------------------------
# amplitudes

def mesa_arrays(n, k, delta_over_g, kappa_L):
    """Vectorised closed-form amplitudes.

    Returns ``(rho_a, tau_a, rho_b, tau_b, singular)``, broadcast over the
    inputs. Entries flagged in ``singular`` hit a kernel pole within the
    relative guard and carry no meaningful value.
    """
    n, k, d, L = np.broadcast_arrays(
        np.asarray(n, dtype=float), np.asarray(k, dtype=float),
        np.asarray(delta_over_g, dtype=float), np.asarray(kappa_L, dtype=float))
    _, _, _, sin_t, cos_t, _, _ = dressed_arrays(n, d)
    kb, kp, km = wavenumber_arrays(n, k, d)
    c2 = cos_t ** 2
    s2 = sin_t ** 2
    sin_2t = 2.0 * sin_t * cos_t
    cos_2t = c2 - s2
    zero_length = L == 0

    with np.errstate(all="ignore"):
        singular = _singular_mask(k, kb, kp, km, L) & ~zero_length

        tau_m_k = tau_kernel(km, k, L)
        tau_m_kb = tau_kernel(km, kb, L)
        tau_p_kb = tau_kernel(kp, kb, L)
        rho_m_k = rho_kernel(km, k, L)
        rho_p_kb = rho_kernel(kp, kb, L)
        dp_k = delta_kernel(kp, k)
        dp_kb = delta_kernel(kp, kb)
        dm_k = delta_kernel(km, k)

        fc, ft = _denominator_factors(c2, k, kb, k_c(kp, km, k, kb, L), k_t(kp, km, k, kb, L))
        den = fc * ft

        tau_a = (c2 * tau_m_k / tau_m_kb * tau_p_kb + s2 * tau_m_k) / den

        rho_a = (
            c2 * tau_m_k / tau_prime(km, k, kb, L) * dp_k / dp_kb * rho_p_kb
            + (1.0 - c2 * tau_p_kb / tau_second(kp, k, kb, L)) * rho_m_k
            + 0.25 * c2 * (kb / k - k / kb) * u_kernel(kp, km, k, sin_t, L)
            * rho_m_k * rho_p_kb / (dm_k * dp_kb)
        ) / den

        tau_b = 0.25 * sin_2t * (1.0 + k / kb) * (
            tau_m_k / tau_tilde(km, k, kb, L) * tau_p_kb
            - tau_p_kb / tau_tilde(kp, k, kb, L) * tau_m_k
        ) / den

        rho_b = sin_2t * (
            0.5 * tau_m_k / tau_bar(km, k, kb, L) * dp_k / dp_kb * rho_p_kb
            - 0.5 * tau_p_kb / tau_bar(kp, k, kb, L) * rho_m_k
            + 0.25 * (k / kb - 1.0) * v_kernel(kp, km, k, cos_2t, L) * tau_m_k * tau_p_kb
        ) / den

    rho_a = np.where(zero_length, 0j, rho_a)
    tau_a = np.where(zero_length, 1 + 0j, tau_a)
    rho_b = np.where(zero_length, 0j, rho_b)
    tau_b = np.where(zero_length, 0j, tau_b)
    finite = np.isfinite(rho_a) & np.isfinite(tau_a) & np.isfinite(rho_b) & np.isfinite(tau_b)
    singular = singular | ~finite
    return rho_a, tau_a, rho_b, tau_b, singular


def resonant_arrays(n, k, kappa_L):
    """Amplitudes at zero detuning from the half sums of the dressed barrier/well kernels."""
    n, k, L = np.broadcast_arrays(np.asarray(n, dtype=float), np.asarray(k, dtype=float),
                                  np.asarray(kappa_L, dtype=float))
    kb, kp, km = wavenumber_arrays(n, k, 0.0)
    with np.errstate(all="ignore"):
        tp, tm = tau_kernel(kp, k, L), tau_kernel(km, k, L)
        rp, rm = rho_kernel(kp, k, L), rho_kernel(km, k, L)
    return 0.5 * (rp + rm), 0.5 * (tp + tm), 0.5 * (rp - rm), 0.5 * (tp - tm)


def mesa_amplitudes(params: MazerParams) -> ScatteringAmplitudes:
    """Exact amplitudes for the mesa mode; raises SingularKernel on a guarded pole."""
    ra, ta, rb, tb, bad = mesa_arrays(params.n, params.k_over_kappa,
                                      params.delta_over_g, params.kappa_L)
    if bool(bad):
        raise SingularKernel(f"kernel denominator vanishes at {params}")
    return ScatteringAmplitudes(complex(ra), complex(ta), complex(rb), complex(tb))


def resonant_amplitudes(params: MazerParams) -> ScatteringAmplitudes:
    """Zero-detuning amplitudes; an independent path kept for cross-validation."""
    if params.delta_over_g != 0:
        raise ValueError("resonant_amplitudes requires delta_over_g == 0")
    if params.kappa_L == 0:
        return ScatteringAmplitudes(0j, 1 + 0j, 0j, 0j)
    ra, ta, rb, tb = resonant_arrays(params.n, params.k_over_kappa, params.kappa_L)
    return ScatteringAmplitudes(complex(ra), complex(ta), complex(rb), complex(tb))


def probability_arrays(rho_a, tau_a, rho_b, tau_b, k, kb):
    """(r_a, t_a, r_b, t_b) with the k_b/k flux factor on the lower-state channel."""
    kb = np.asarray(kb, dtype=complex)
    k = np.asarray(k, dtype=float)
    flux = np.where((kb.imag == 0) & (kb.real > 0), kb.real / k, 0.0)
    r_b = np.where(flux > 0, flux * np.abs(rho_b) ** 2, 0.0)
    t_b = np.where(flux > 0, flux * np.abs(tau_b) ** 2, 0.0)
    return np.abs(rho_a) ** 2, np.abs(tau_a) ** 2, r_b, t_b


def probabilities(amps: ScatteringAmplitudes, waves: ChannelWavenumbers) -> ChannelProbabilities:
    out = probability_arrays(amps.rho_a, amps.tau_a, amps.rho_b, amps.tau_b, waves.k, waves.k_b)
    return ChannelProbabilities(*(float(x) for x in out))


def emission_arrays(n, k, delta_over_g, kappa_L):
    """Vectorised induced emission probability and singular mask.

    Blocked points (k <= sqrt(delta)) are exactly zero and never singular.
    """
    ra, ta, rb, tb, bad = mesa_arrays(n, k, delta_over_g, kappa_L)
    kb, _, _ = wavenumber_arrays(n, k, delta_over_g)
    _, _, r_b, t_b = probability_arrays(ra, ta, rb, tb, k, kb)
    blocked = is_blocked(k, delta_over_g)
    p = np.where(blocked, 0.0, r_b + t_b)
    return p, bad & ~blocked


def emission_probability(params: MazerParams) -> float:
    """Probability that the atom leaves in the lower state having emitted one photon."""
    if is_blocked(params.k_over_kappa, params.delta_over_g):
        return 0.0
    amps = mesa_amplitudes(params)
    return probabilities(amps, channel_wavenumbers(params)).p_em
