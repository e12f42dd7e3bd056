"""Coupled-channel solver for arbitrary cavity mode profiles.

Works in the bare basis (|a,n>, |b,n+1>), where the cavity enters only
through u(z). The cavity is cut into slices of constant u; inside a slice the
two coupled equations phi'' = -K phi decouple on the eigenvectors of K and are
solved exactly. The boundary problem is then posed as one banded linear system
over all slices, with every exponential referenced to the slice end where it
is bounded, so deeply evanescent cavities stay well conditioned.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import MazerParams, branch_sqrt
from .errors import IllConditioned, NoConvergence
from .mesa import ScatteringAmplitudes

COND_LIMIT = 1e12
DENSE_LIMIT = 64  # unknowns; above this the sparse path is used
DEFAULT_SLICES = 256
MAX_SLICES = 2 ** 14
SECH2_WIDTH = 1.0 / 8.0  # sech^2 half-width as a fraction of L


class ProfileKind(enum.Enum):
    MESA = "mesa"
    SECH2 = "sech2"
    SINE2 = "sine2"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class ModeProfile:
    """Cavity mode function on [0, L], zero outside.

    ``samples`` (Sampled only) are ``(z_fraction, u)`` pairs read as a
    zero-order hold: u keeps the value of the last sample at or before z.
    ``length_kappa_L``, when given, must agree with the params it is solved with.
    """

    kind: ProfileKind
    length_kappa_L: Optional[float] = None
    samples: Optional[tuple] = None

    def __post_init__(self):
        if self.kind is ProfileKind.SAMPLED:
            if not self.samples:
                raise ValueError("sampled profile needs at least one sample")
            z = np.array([s[0] for s in self.samples], dtype=float)
            u = np.array([s[1] for s in self.samples], dtype=float)
            if np.any(z < 0) or np.any(z > 1) or np.any(np.diff(z) <= 0):
                raise ValueError("sample positions must be increasing and lie in [0, 1]")
            if np.any(u < 0):
                raise ValueError("mode function must be >= 0")
            object.__setattr__(self, "samples", tuple((float(a), float(b)) for a, b in zip(z, u)))

    @classmethod
    def mesa(cls, length_kappa_L=None):
        return cls(ProfileKind.MESA, length_kappa_L)

    @classmethod
    def sampled(cls, samples: Sequence[tuple], length_kappa_L=None):
        return cls(ProfileKind.SAMPLED, length_kappa_L, tuple(samples))

    def u(self, z_fraction):
        """Mode function at fractional positions z/L in [0, 1]."""
        f = np.asarray(z_fraction, dtype=float)
        if self.kind is ProfileKind.MESA:
            return np.ones_like(f)
        if self.kind is ProfileKind.SINE2:
            return np.sin(np.pi * f) ** 2
        if self.kind is ProfileKind.SECH2:
            return 1.0 / np.cosh((f - 0.5) / SECH2_WIDTH) ** 2
        z = np.array([s[0] for s in self.samples])
        u = np.array([s[1] for s in self.samples])
        idx = np.clip(np.searchsorted(z, f, side="right") - 1, 0, len(z) - 1)
        return u[idx]


def load_profile(path) -> ModeProfile:
    """Read a two-column ``z_fraction u`` text file ('#' starts a comment)."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"expected two columns, got {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    return ModeProfile.sampled(rows)


@dataclass(frozen=True)
class SliceTransfer:
    """4x4 propagator of (phi_a, phi_a', phi_b, phi_b') across one slice."""

    matrix: np.ndarray

    @property
    def determinant(self) -> complex:
        return complex(np.linalg.det(self.matrix))


def stationary_coupling_matrix(u: float, params: MazerParams) -> np.ndarray:
    """K in phi'' = -K phi for constant mode value u (units of kappa**2)."""
    if u < 0:
        raise ValueError("u must be >= 0")
    k2 = params.k_over_kappa ** 2
    c = -math.sqrt(params.n + 1.0) * u
    return np.array([[k2, c], [c, k2 - params.delta_over_g]])


def _eig_sym2(a, b, c):
    """Eigen-decomposition of [[a, c], [c, b]] for arrays of real entries.

    Returns (q2, V) with q2[..., j] the eigenvalues and V[..., :, j] the
    orthonormal eigenvectors.
    """
    mean = 0.5 * (a + b)
    r = np.hypot(0.5 * (a - b), c)
    phi = 0.5 * np.arctan2(2.0 * c, a - b)
    cs, sn = np.cos(phi), np.sin(phi)
    q2 = np.stack([mean + r, mean - r], axis=-1)
    V = np.stack([np.stack([cs, -sn], axis=-1), np.stack([sn, cs], axis=-1)], axis=-2)
    return q2, V


def _cos_sinc(q2, x):
    """cos(q x) and sin(q x)/q as functions of q**2, exact through q -> 0."""
    q2 = np.asarray(q2, dtype=complex)
    q = branch_sqrt(q2)
    qx = q * x
    small = np.abs(qx) < 1e-3
    with np.errstate(all="ignore"):
        c = np.where(small, 1 - q2 * x ** 2 / 2 + q2 ** 2 * x ** 4 / 24, np.cos(qx))
        s = np.where(small, x * (1 - q2 * x ** 2 / 6 + q2 ** 2 * x ** 4 / 120), np.sin(qx) / q)
    return c, s


def slice_transfer(u: float, dz: float, params: MazerParams) -> SliceTransfer:
    """Exact propagator over a slice of constant mode value u and width dz."""
    if not dz >= 0:
        raise ValueError("dz must be >= 0")
    K = stationary_coupling_matrix(u, params)
    q2, V = _eig_sym2(K[0, 0], K[1, 1], K[0, 1])
    c, s = _cos_sinc(q2, dz)
    blocks = np.zeros((2, 2, 2), dtype=complex)  # channel, (value, deriv) x (value, deriv)
    blocks[:, 0, 0] = c
    blocks[:, 0, 1] = s
    blocks[:, 1, 0] = -q2 * s
    blocks[:, 1, 1] = c
    # T[(i,p),(j,r)] = sum_c V[i,c] M_c[p,r] V[j,c]
    T = np.einsum("ic,cpr,jc->ipjr", V, blocks, V).reshape(4, 4)
    return SliceTransfer(T)


def _slice_basis(q2, dz):
    """Values and derivatives of two basis solutions at both ends of each slice.

    Returns an array of shape (..., 2 basis, 2 ends, 2 [value, derivative]).
    Slices with |q dz| < 1 use the cos/sinc pair started at the left end;
    others use exp(iq(z - z_left)) and exp(-iq(z - z_right)), both of modulus
    <= 1 on the slice because Im q >= 0.
    """
    q2 = np.asarray(q2, dtype=complex)
    q = branch_sqrt(q2)
    c, s = _cos_sinc(q2, dz)
    e = np.exp(1j * q * dz)
    one = np.ones_like(q)
    zero = np.zeros_like(q)
    # small-|q dz| basis: f1 = cos, f2 = sin/q
    small = np.stack([
        np.stack([np.stack([one, zero], -1), np.stack([c, -q2 * s], -1)], -2),
        np.stack([np.stack([zero, one], -1), np.stack([s, c], -1)], -2),
    ], -3)
    expo = np.stack([
        np.stack([np.stack([one, 1j * q], -1), np.stack([e, 1j * q * e], -1)], -2),
        np.stack([np.stack([e, -1j * q * e], -1), np.stack([one, -1j * q], -1)], -2),
    ], -3)
    use_small = (np.abs(q) * dz < 1.0)[..., None, None, None]
    return np.where(use_small, small, expo)


def _boundary_system(u_slices, dz, params: MazerParams):
    """Assemble the matching equations; returns (rows, cols, vals, rhs, size).

    Unknowns are ordered rho_a, rho_b, tau_a, tau_b, then four basis
    coefficients per slice. Interface j contributes four rows (phi_a, phi_a',
    phi_b, phi_b'); derivative rows are divided by a common momentum scale.
    """
    N = len(u_slices)
    k = params.k_over_kappa
    kb = complex(branch_sqrt(k ** 2 - params.delta_over_g))
    root = math.sqrt(params.n + 1.0)
    q2, V = _eig_sym2(np.full(N, k ** 2), np.full(N, k ** 2 - params.delta_over_g),
                      -root * np.asarray(u_slices, dtype=float))
    basis = _slice_basis(q2, dz)  # (slice, channel, basis fn, end, value/derivative)
    scale = max(k, abs(kb), float(np.max(np.sqrt(np.abs(q2)))), 1e-300)
    weight = np.array([1.0, 1.0 / scale])
    size = 4 * N + 4

    # coef[j, i, p, c, b, e]: bare component i, order p, channel c, basis b, end e
    coef = np.einsum("jic,jcbep,p->jipcbe", V, basis, weight)
    j, i, p, c, b = np.indices(coef.shape[:5])
    col = 4 + 4 * j + 2 * c + b
    left_sign = np.where(j == 0, 1.0, -1.0)
    rows = [(4 * j + 2 * i + p).ravel(), (4 * (j + 1) + 2 * i + p).ravel()]
    cols = [col.ravel(), col.ravel()]
    vals = [(left_sign * coef[..., 0]).ravel(), coef[..., 1].ravel()]

    r0 = 4 * N
    rows.append(np.array([0, 1, 2, 3, r0, r0 + 1, r0 + 2, r0 + 3]))
    cols.append(np.array([0, 0, 1, 1, 2, 2, 3, 3]))
    vals.append(np.array([-1.0, 1j * k / scale, -1.0, 1j * kb / scale,
                          -1.0, -1j * k / scale, -1.0, -1j * kb / scale]))
    rhs = np.zeros(size, dtype=complex)
    rhs[0] = 1.0
    rhs[1] = 1j * k / scale
    return (np.concatenate(rows), np.concatenate(cols),
            np.concatenate(vals).astype(complex), rhs, size)


def _solve_linear(rows, cols, vals, rhs, size):
    if size <= DENSE_LIMIT:
        A = np.zeros((size, size), dtype=complex)
        np.add.at(A, (rows, cols), vals)
        cond = np.linalg.cond(A)
        if not cond < COND_LIMIT:
            raise IllConditioned(f"boundary system condition number {cond:.3e}")
        return np.linalg.solve(A, rhs)
    A = sp.csc_matrix((vals, (rows, cols)), shape=(size, size))
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:  # exactly singular
        raise IllConditioned(str(exc)) from exc
    inv = spla.LinearOperator(
        (size, size), dtype=complex,
        matvec=lambda x: lu.solve(np.asarray(x, dtype=complex)),
        rmatvec=lambda x: lu.solve(np.asarray(x, dtype=complex), trans="H"),
    )
    cond = spla.norm(A, 1) * spla.onenormest(inv)
    if not cond < COND_LIMIT:
        raise IllConditioned(f"boundary system condition estimate {cond:.3e}")
    return lu.solve(rhs)


def solve_scattering(profile: ModeProfile, params: MazerParams,
                     n_slices: int) -> ScatteringAmplitudes:
    """Scattering amplitudes for an incoming unit |a,n> wave from the left."""
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    L = params.kappa_L
    if profile.length_kappa_L is not None and not math.isclose(profile.length_kappa_L, L):
        raise ValueError("profile length does not match params.kappa_L")
    if L == 0:
        return ScatteringAmplitudes(0j, 1 + 0j, 0j, 0j)
    dz = L / n_slices
    mids = (np.arange(n_slices) + 0.5) / n_slices
    u = profile.u(mids)
    x = _solve_linear(*_boundary_system(u, dz, params))
    return ScatteringAmplitudes(rho_a=complex(x[0]), tau_a=complex(x[2]),
                                rho_b=complex(x[1]), tau_b=complex(x[3]))


def default_slices(profile: ModeProfile) -> int:
    return 1 if profile.kind is ProfileKind.MESA else DEFAULT_SLICES


def converge(profile: ModeProfile, params: MazerParams, tol: float):
    """Double the slice count from 16 until successive amplitudes agree to ``tol``.

    Returns ``(amplitudes, n_slices_used)``.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    n = 16
    prev = solve_scattering(profile, params, n)
    while n < MAX_SLICES:
        n *= 2
        cur = solve_scattering(profile, params, n)
        if np.max(np.abs(cur.as_array() - prev.as_array())) < tol:
            return cur, n
        prev = cur
    raise NoConvergence(f"no convergence to {tol} with {MAX_SLICES} slices")
