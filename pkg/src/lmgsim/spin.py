"""Collective-spin algebra for an integer spin j on a d = 2j+1 level system.

Basis convention: index 0 holds m = j (highest weight), index d-1 holds
m = -j, so Jz = diag(j, j-1, ..., -j).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

JZ_BASIS = "jz"
TRANSMON_BASIS = "transmon"

PHASE_TIE_TOL = 1e-12


def _validate_j(j) -> int:
    if not float(j).is_integer() or j < 1:
        raise ValueError(f"spin size must be a positive integer, got {j!r}")
    return int(j)


def m_values(j: int) -> np.ndarray:
    """Jz eigenvalues in basis order, m = j down to -j."""
    j = _validate_j(j)
    return np.arange(j, -j - 1, -1, dtype=float)


@dataclass(frozen=True)
class AngularMomentumSet:
    """Dense angular-momentum matrices and the parity operator for spin j."""

    j: int
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    j_plus: np.ndarray
    j_minus: np.ndarray
    parity: np.ndarray

    @property
    def d(self) -> int:
        return 2 * self.j + 1


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=64)
def build_angular_momentum(j: int) -> AngularMomentumSet:
    """Construct Jx, Jy, Jz, J+/-, and parity exp[i pi (Jz - j)] for integer j >= 1.

    Ladder elements are <j,m+1|J+|j,m> = sqrt(j(j+1) - m(m+1)).
    """
    j = _validate_j(j)
    d = 2 * j + 1
    m = m_values(j)
    jz = np.diag(m).astype(complex)
    # J+ raises m: index k (m = j-k) -> index k-1
    amp = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    j_plus = np.zeros((d, d), dtype=complex)
    j_plus[np.arange(d - 1), np.arange(1, d)] = amp
    j_minus = j_plus.conj().T.copy()
    jx = (j_plus + j_minus) / 2
    jy = (j_plus - j_minus) / 2j
    # integer j and m, so exp[i pi (m - j)] = (-1)^(j-m), real +/-1
    parity = np.diag((-1.0) ** (j - m)).astype(complex)
    mats = [jx, jy, jz, j_plus, j_minus, parity]
    return AngularMomentumSet(j, *(_freeze(a) for a in mats))


@dataclass(frozen=True)
class SpinState:
    """Normalized complex amplitude vector over d = 2j+1 levels."""

    amplitudes: np.ndarray
    basis: str = JZ_BASIS

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm} deviates from 1 beyond 1e-12")
        if self.basis not in (JZ_BASIS, TRANSMON_BASIS):
            raise ValueError(f"unknown basis tag {self.basis!r}")
        object.__setattr__(self, "amplitudes", _freeze(amp))

    @property
    def d(self) -> int:
        return self.amplitudes.size

    def expectation(self, op: np.ndarray) -> complex:
        return complex(self.amplitudes.conj() @ op @ self.amplitudes)

    def overlap(self, other: "SpinState") -> complex:
        return complex(other.amplitudes.conj() @ self.amplitudes)


def fix_global_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude amplitude is real positive.

    Ties within PHASE_TIE_TOL are broken by the lowest index, which keeps
    eigenvector comparisons deterministic.
    """
    vec = np.asarray(vec, dtype=complex)
    mags = np.abs(vec)
    idx = int(np.argmax(mags >= mags.max() - PHASE_TIE_TOL))
    ref = vec[idx]
    if abs(ref) == 0.0:
        return vec.copy()
    return vec * (abs(ref) / ref)


@lru_cache(maxsize=64)
def _jy_eigensystem(j: int):
    ops = build_angular_momentum(j)
    w, v = np.linalg.eigh(ops.jy)
    return _freeze(w), _freeze(v)


def rotation_about_y(j: int, angle: float) -> np.ndarray:
    """exp(-i angle Jy), computed by eigendecomposition (exact at these sizes)."""
    w, v = _jy_eigensystem(_validate_j(j))
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


def basis_state(j: int, m: int) -> SpinState:
    """|j,m> in the Jz basis."""
    j = _validate_j(j)
    if not -j <= m <= j:
        raise ValueError(f"m={m} out of range for j={j}")
    amp = np.zeros(2 * j + 1, dtype=complex)
    amp[j - int(m)] = 1.0
    return SpinState(amp)


def jx_eigenstate(j: int, m: int) -> SpinState:
    """Jx eigenstate |j,m>_x = exp(-i pi/2 Jy) |j,m>, phase-fixed."""
    j = _validate_j(j)
    if not -j <= m <= j:
        raise ValueError(f"m={m} out of range for j={j}")
    col = rotation_about_y(j, np.pi / 2)[:, j - int(m)]
    return SpinState(fix_global_phase(col))


def definite_parity_jx2_eigenstate(j: int, m: int, sign: int) -> SpinState:
    """Definite-parity Jx^2 eigenstate (|j,m>_x +/- |j,-m>_x)/sqrt(2).

    For m = 0 only the + combination exists and equals |j,0>_x.
    """
    j = _validate_j(j)
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if not 0 <= m <= j:
        raise ValueError(f"m={m} must satisfy 0 <= m <= j")
    if m == 0:
        if sign == -1:
            raise ValueError("(m=0, sign=-1) does not exist: Pi|j,0>_x = +|j,0>_x")
        return jx_eigenstate(j, 0)
    a = jx_eigenstate(j, m).amplitudes
    b = jx_eigenstate(j, -m).amplitudes
    return SpinState(fix_global_phase((a + sign * b) / np.sqrt(2)))


def spin_coherent_state(j: int, theta: float, phi: float) -> SpinState:
    """|theta,phi> = exp(-i phi Jz) exp(-i theta Jy) |j,j>.

    Satisfies <J> = j (sin t cos p, sin t sin p, cos t).
    """
    j = _validate_j(j)
    rotated = rotation_about_y(j, theta)[:, 0]
    phases = np.exp(-1j * phi * m_values(j))
    return SpinState(phases * rotated)


def husimi_q(state: SpinState, theta_grid, phi_grid) -> np.ndarray:
    """Husimi Q(theta, phi) = |<theta,phi|psi>|^2 on the given grids.

    Returns a (len(theta_grid), len(phi_grid)) real array with entries in [0, 1].
    """
    if state.basis != JZ_BASIS:
        raise ValueError("husimi_q expects a Jz-basis state")
    theta_grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    phi_grid = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    j = (state.d - 1) // 2
    m = m_values(j)
    w, v = _jy_eigensystem(j)
    # rot[t, m] = (e^{-i theta_t Jy} |j,j>)_m
    rot = np.einsum("mk,tk,k->tm", v, np.exp(-1j * np.outer(theta_grid, w)), v[0].conj())
    weighted = rot.conj() * state.amplitudes[None, :]
    overlaps = weighted @ np.exp(1j * np.outer(m, phi_grid))
    q = np.abs(overlaps) ** 2
    return np.clip(q.real, 0.0, 1.0)
