"""LMG Hamiltonian construction, basis relabeling, and parity-labeled spectra.

The dimensionless Hamiltonian is H/Omega = -h Jz - (gx/2j) Jx^2 - (gy/2j) Jy^2.
In the Jz basis it couples m <-> m+-2 only; relabeling even-parity states into
the lowest j+1 qudit levels moves those couplings onto the first off-diagonals.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fileio
from .spin import JZ_BASIS, TRANSMON_BASIS, build_angular_momentum, fix_global_phase, m_values

OMEGA_DEFAULT_HZ = 1.910e6
# absolute tolerance (units Omega) below which a cross-parity pair is ordered
# even first instead of by floating-point energy
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class LmgParams:
    """Dimensionless couplings plus the simulation energy scale Omega/2pi in Hz."""

    h: float
    gamma_x: float
    gamma_y: float = 0.0
    omega_over_2pi: float = OMEGA_DEFAULT_HZ

    def __post_init__(self):
        if not self.omega_over_2pi > 0:
            raise ValueError("omega_over_2pi must be positive")

    @property
    def omega_rad(self) -> float:
        """Omega in rad/s."""
        return 2 * np.pi * self.omega_over_2pi


@dataclass(frozen=True)
class BasisMap:
    """Permutation from Jz-basis index k (m = j - k) to transmon level.

    Even-parity m (k even) occupy levels 0..j with Delta m = 2 between
    neighbors; odd-parity m occupy levels j+1..2j likewise. Consecutive levels
    inside each block then differ by |Delta m| = 2, which is what renders the
    relabeled Hamiltonian tridiagonal.
    """

    j: int
    perm: np.ndarray

    @classmethod
    def standard(cls, j: int) -> "BasisMap":
        d = 2 * j + 1
        perm = np.empty(d, dtype=int)
        for k in range(d):
            perm[k] = k // 2 if k % 2 == 0 else j + 1 + (k - 1) // 2
        perm.setflags(write=False)
        return cls(j, perm)

    @property
    def d(self) -> int:
        return 2 * self.j + 1

    def permutation_matrix(self) -> np.ndarray:
        p = np.zeros((self.d, self.d))
        p[self.perm, np.arange(self.d)] = 1.0
        return p

    def level_of_m(self, m: int) -> int:
        return int(self.perm[self.j - m])

    def m_of_level(self, level: int) -> int:
        k = int(np.argmax(self.perm == level))
        return self.j - k

    def to_transmon_matrix(self, a: np.ndarray) -> np.ndarray:
        out = np.empty_like(a)
        out[np.ix_(self.perm, self.perm)] = a
        return out

    def to_jz_matrix(self, a: np.ndarray) -> np.ndarray:
        return a[np.ix_(self.perm, self.perm)]

    def to_transmon_vector(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        out[self.perm] = v
        return out

    def to_jz_vector(self, v: np.ndarray) -> np.ndarray:
        return v[self.perm]

    def parity_signs_transmon(self) -> np.ndarray:
        """+1 for levels 0..j, -1 for levels j+1..2j."""
        signs = np.ones(self.d)
        signs[self.j + 1:] = -1.0
        return signs


@lru_cache(maxsize=64)
def _lmg_basis_matrices(j: int, basis: str):
    """Coefficient matrices so H = h*Mz + gx*Mxx + gy*Myy (all real symmetric)."""
    ops = build_angular_momentum(j)
    mz = -ops.jz.real
    mxx = -(ops.jx @ ops.jx).real / (2 * j)
    myy = -(ops.jy @ ops.jy).real / (2 * j)
    if basis == TRANSMON_BASIS:
        bm = BasisMap.standard(j)
        mz, mxx, myy = (bm.to_transmon_matrix(a) for a in (mz, mxx, myy))
    for a in (mz, mxx, myy):
        a.setflags(write=False)
    return mz, mxx, myy


def build_lmg(j: int, params: LmgParams, basis: str = JZ_BASIS) -> np.ndarray:
    """Dimensionless H/Omega as a dense real-symmetric matrix.

    basis=JZ_BASIS orders rows by m = j..-j; basis=TRANSMON_BASIS applies the
    standard parity relabeling and is exactly tridiagonal.
    """
    if basis not in (JZ_BASIS, TRANSMON_BASIS):
        raise ValueError(f"unknown basis {basis!r}")
    mz, mxx, myy = _lmg_basis_matrices(int(j), basis)
    return params.h * mz + params.gamma_x * mxx + params.gamma_y * myy


def parity_operator(j: int, basis: str = JZ_BASIS) -> np.ndarray:
    ops = build_angular_momentum(j)
    pi = ops.parity.real.copy()
    if basis == TRANSMON_BASIS:
        pi = BasisMap.standard(j).to_transmon_matrix(pi)
    return pi


def sector_hamiltonian(j: int, params: LmgParams, sign: int) -> np.ndarray:
    """Even (+1) or odd (-1) parity block of the transmon-basis H/Omega.

    The even block is (j+1) x (j+1) over levels 0..j; used by the
    doubled-spin protocols that simulate a single parity sector.
    """
    h = build_lmg(j, params, TRANSMON_BASIS)
    if sign == +1:
        return h[: j + 1, : j + 1]
    if sign == -1:
        return h[j + 1:, j + 1:]
    raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class LabeledSpectrum:
    """Ascending eigenvalues with parity labels and phase-fixed eigenvectors."""

    energies: np.ndarray
    parities: np.ndarray
    eigenvectors: np.ndarray  # column i belongs to energies[i]

    @property
    def even_energies(self) -> np.ndarray:
        return self.energies[self.parities > 0]

    @property
    def odd_energies(self) -> np.ndarray:
        return self.energies[self.parities < 0]

    def even_vectors(self) -> np.ndarray:
        return self.eigenvectors[:, self.parities > 0]

    def odd_vectors(self) -> np.ndarray:
        return self.eigenvectors[:, self.parities < 0]


def diagonalize(
    h: np.ndarray,
    parity_op: np.ndarray,
    shift_ground_to_zero: bool = False,
    comm_tol: float = 1e-10,
) -> LabeledSpectrum:
    """Diagonalize H sector-by-sector and label each eigenstate by parity.

    Raises if [H, Pi] exceeds comm_tol (a basis or labeling bug upstream).
    Within each parity sector eigenvalues come out exactly labeled; the merged
    ordering is ascending with even-before-odd for splittings below
    DEGENERACY_TOL, so deep quasi-degenerate pairs are ordered deterministically.
    The optional zero shift is applied to the output only.
    """
    h = np.asarray(h)
    comm = h @ parity_op - parity_op @ h
    if np.max(np.abs(comm)) > comm_tol * max(1.0, np.max(np.abs(h))):
        raise ValueError("Hamiltonian does not commute with the parity operator")
    # parity eigenbasis (exactly +/-1 eigenvalues); diagonal Pi short-circuits
    if np.allclose(parity_op, np.diag(np.diagonal(parity_op)), atol=1e-14):
        signs = np.sign(np.diagonal(parity_op).real)
        basis = np.eye(h.shape[0])
    else:
        w, v = np.linalg.eigh(parity_op)
        signs = np.sign(w)
        basis = v
    per_sector = {}
    for s in (+1, -1):
        cols = basis[:, signs == s]
        if cols.size == 0:
            per_sector[s] = (np.empty(0), np.empty((h.shape[0], 0)))
            continue
        hs = cols.conj().T @ h @ cols
        ws, vs = np.linalg.eigh(hs)
        vecs = cols @ vs
        per_sector[s] = (ws, vecs)
    we, ve = per_sector[+1]
    wo, vo = per_sector[-1]
    energies, parities, vectors = [], [], []
    ie = io_ = 0
    while ie < we.size or io_ < wo.size:
        take_even = io_ >= wo.size or (
            ie < we.size and we[ie] <= wo[io_] + DEGENERACY_TOL
        )
        if take_even:
            energies.append(we[ie]); parities.append(1.0)
            vectors.append(fix_global_phase(ve[:, ie])); ie += 1
        else:
            energies.append(wo[io_]); parities.append(-1.0)
            vectors.append(fix_global_phase(vo[:, io_])); io_ += 1
    energies = np.array(energies)
    if shift_ground_to_zero:
        energies = energies - energies[0]
    return LabeledSpectrum(energies, np.array(parities), np.column_stack(vectors))


EVEN_ODD = "even_odd"
EVEN_EVEN = "even_even"
ODD_ODD = "odd_odd"


def gap(spectrum: LabeledSpectrum, kind: str, n: int = 0) -> float:
    """Energy gap (units Omega) between the designated pair.

    even_odd: odd[n] - even[n]; even_even: even[n+1] - even[n];
    odd_odd: odd[n+1] - odd[n]. n=0 gives the paper's E_even-odd / E_even-even.
    """
    ev = spectrum.even_energies
    od = spectrum.odd_energies
    try:
        if kind == EVEN_ODD:
            return float(abs(od[n] - ev[n]))
        if kind == EVEN_EVEN:
            return float(abs(ev[n + 1] - ev[n]))
        if kind == ODD_ODD:
            return float(abs(od[n + 1] - od[n]))
    except IndexError:
        raise IndexError(f"spectrum has too few levels for {kind} at n={n}") from None
    raise ValueError(f"unknown gap kind {kind!r}")


def lmg_spectrum(j: int, h: float, gamma_x: float = 1.0, gamma_y: float = 0.0,
                 shift_ground_to_zero: bool = False) -> LabeledSpectrum:
    """Convenience wrapper: diagonalize H/Omega in the Jz basis."""
    params = LmgParams(h=h, gamma_x=gamma_x, gamma_y=gamma_y)
    return diagonalize(build_lmg(j, params), parity_operator(j),
                       shift_ground_to_zero=shift_ground_to_zero)


def write_spectrum_csv(path, j: int, h_over_gamma_x_grid, gamma_x: float = 1.0,
                       shift_ground_to_zero: bool = True) -> None:
    """Sweep h/gx and export (h_over_gamma_x, level_index, energy_over_Omega, parity)."""
    rows = []
    for r in h_over_gamma_x_grid:
        spec = lmg_spectrum(j, r * gamma_x, gamma_x,
                            shift_ground_to_zero=shift_ground_to_zero)
        for idx, (e, p) in enumerate(zip(spec.energies, spec.parities)):
            rows.append((r, idx, e, int(p)))
    fileio.write_csv(path, ("h_over_gamma_x", "level_index", "energy_over_Omega", "parity"), rows)
