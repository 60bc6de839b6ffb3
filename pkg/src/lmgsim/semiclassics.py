"""Classical energy surface of the collective-spin model and its semiclassical
density of states.

With gamma_x scaled to 1 and z = -cos(theta) the surface is
H(z, phi) = h z - (1 - z^2) cos^2(phi) / 2, and the density of states is the
phase-space measure rho(E) = (1/4pi) int dz dphi delta[H - E], normalized so
that the integral of rho over the allowed band is 1.

Three regions: I (h <= 1, E <= -h, two classical branches), II (h <= 1,
E >= -h) and III (h >= 1). The Region-I integrand has an inverse-square-root
endpoint singularity which is subtracted analytically; the subtracted piece
integrates to a complete elliptic integral. rho diverges logarithmically at
E = -h (the separatrix energy): values inside |E + h| < DIVERGENCE_CUTOFF are
reported as inf rather than clamped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import fileio

DIVERGENCE_CUTOFF = 1e-6
_QUAD_ABS_TOL = 1e-9  # adaptive Gauss-Kronrod refinement target

REGION_I = "I"
REGION_II = "II"
REGION_III = "III"


@dataclass(frozen=True)
class EnergySurface:
    """E(theta, phi)/j = -h cos(theta) - (gamma_x/2) sin^2(theta) cos^2(phi)."""

    h: float
    gamma_x: float

    def __call__(self, theta, phi):
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        val = -self.h * np.cos(theta) - 0.5 * self.gamma_x * (np.sin(theta) ** 2) * np.cos(phi) ** 2
        return float(val) if val.ndim == 0 else val

    @property
    def lower_bound(self) -> float:
        if self.gamma_x <= 0:
            return -abs(self.h)
        return -max(self.h, (self.h ** 2 + self.gamma_x ** 2) / (2 * self.gamma_x))

    @property
    def upper_bound(self) -> float:
        return self.h


def ground_minima(h: float, gamma_x: float):
    """Minimizing polar angles and the minimum energy per spin.

    h >= gamma_x: single minimum theta_0 = 0, E_min = -h. Below the critical
    ratio the minimum splits into +/- arccos(h/gamma_x) at phi = 0, pi.
    """
    if gamma_x <= 0:
        raise ValueError("gamma_x must be positive")
    if h >= gamma_x:
        return [0.0], -h
    theta0 = math.acos(h / gamma_x)
    return [theta0, -theta0], -(h * h + gamma_x * gamma_x) / (2 * gamma_x)


@dataclass(frozen=True)
class CriticalEnergy:
    """Separatrix energy: barrier top of the surface, absolute and ground-shifted."""

    barrier_top: float    # H(theta=0) = -h, per spin
    shifted: float        # relative to E_min: (gamma_x - h)^2 / (2 gamma_x)


def critical_energy(h: float, gamma_x: float) -> CriticalEnergy | None:
    """Critical energy of the excited-state transition; None when h >= gamma_x
    (no barrier, hence no transition)."""
    if gamma_x <= 0:
        raise ValueError("gamma_x must be positive")
    if h >= gamma_x:
        return None
    return CriticalEnergy(barrier_top=-h, shifted=(gamma_x - h) ** 2 / (2 * gamma_x))


def energy_band(h: float) -> tuple[float, float]:
    """Classically allowed [E_min, E_max] for gamma_x = 1."""
    if h <= 1.0:
        return -(h * h + 1.0) / 2.0, h
    return -h, h


def region_of(h: float, e: float) -> str:
    if h >= 1.0:
        return REGION_III
    return REGION_I if e <= -h else REGION_II


def _zetas(h: float, e: float):
    r = e / h
    root = math.sqrt(r * r - 1.0)
    return r + root, r - root  # zeta_plus, zeta_minus


def z_roots(h: float, e: float, phi: float):
    """Both roots z_+- of H(z, phi) = E for gamma_x = 1 (may lie outside [-1,1])."""
    c = math.cos(phi) ** 2
    disc = h * h + c * (2 * e + c)
    if disc < 0:
        return None
    root = math.sqrt(disc)
    return (-h + root) / c, (-h - root) / c


def _rho_region_one(h: float, e: float) -> float:
    zp, zm = _zetas(h, e)
    czero = -h * zm                      # cos^2(phi_0)
    phi0 = math.acos(math.sqrt(min(czero, 1.0)))
    s = 1.0 / math.sqrt(czero + h * zp)  # matches the integrand at phi_0

    def regularized(phi):
        c = math.cos(phi) ** 2
        t = c + h * zm
        if t <= 0.0:
            return 0.0  # limit of the subtracted integrand at the endpoint
        return 1.0 / math.sqrt((c + h * zp) * t) - s / math.sqrt(t)

    val, _ = quad(regularized, 0.0, phi0, epsabs=_QUAD_ABS_TOL, limit=200)
    m = 1.0 + h * zm
    remainder = (2.0 / math.pi) * s * elliptic_k(m)
    return (2.0 / math.pi) * val + remainder


def _rho_region_two_three(h: float, e: float) -> float:
    def integrand(phi):
        c = math.cos(phi) ** 2
        return 1.0 / math.sqrt(h * h + c * (2 * e + c))

    # integrand is pi-periodic and symmetric about pi/2
    val, _ = quad(integrand, 0.0, math.pi / 2, epsabs=_QUAD_ABS_TOL, limit=200)
    return val / math.pi


def density_of_states(h: float, e: float, gamma_x: float = 1.0) -> float:
    """Semiclassical rho(E) per spin; inf inside the divergence cutoff at E = -h.

    General gamma_x is handled by rescaling energies into the gamma_x = 1 form.
    """
    if gamma_x != 1.0:
        if gamma_x <= 0:
            raise ValueError("gamma_x must be positive")
        return density_of_states(h / gamma_x, e / gamma_x) / gamma_x
    lo, hi = energy_band(h)
    if not lo - 1e-12 <= e <= hi + 1e-12:
        raise ValueError(f"E={e} outside the allowed band [{lo}, {hi}] for h={h}")
    if h < 1.0 and abs(e + h) < DIVERGENCE_CUTOFF:
        return math.inf
    if h >= 1.0 and abs(e + h) < 1e-12:
        # band edge in region III: finite but the quadrature would see the
        # endpoint root collapse; nudge inward
        e = -h + 1e-12
    if region_of(h, e) == REGION_I:
        return _rho_region_one(h, e)
    return _rho_region_two_three(h, e)


@dataclass(frozen=True)
class DosResult:
    energies: np.ndarray
    rho: np.ndarray
    regions: tuple


def dos_curve(h: float, energies=None, n: int = 200, gamma_x: float = 1.0) -> DosResult:
    """rho(E) on a grid over the allowed band, skipping the divergent sliver."""
    if gamma_x <= 0:
        raise ValueError("gamma_x must be positive")
    if energies is None:
        lo, hi = energy_band(h / gamma_x)
        lo, hi = lo * gamma_x, hi * gamma_x
        pad = 1e-4 * (hi - lo)
        energies = np.linspace(lo + pad, hi - pad, n)
    energies = np.asarray(energies, dtype=float)
    rho = np.array([density_of_states(h, e, gamma_x) for e in energies])
    regions = tuple(region_of(h / gamma_x, e / gamma_x) for e in energies)
    return DosResult(energies, rho, regions)


def dos_normalization(h: float) -> float:
    """Integral of rho over the allowed band (gamma_x = 1); equals 1.

    The divergent sliver |E + h| < DIVERGENCE_CUTOFF is excluded; it carries
    O(cutoff * log(1/cutoff)) weight, far below the check tolerance.
    """
    lo, hi = energy_band(h)
    total = 0.0
    if h < 1.0:
        cut = DIVERGENCE_CUTOFF
        val, _ = quad(lambda e: density_of_states(h, e), lo, -h - cut,
                      epsabs=1e-10, limit=400)
        total += val
        val, _ = quad(lambda e: density_of_states(h, e), -h + cut, hi,
                      epsabs=1e-10, limit=400)
        total += val
    else:
        val, _ = quad(lambda e: density_of_states(h, e), lo, hi,
                      epsabs=1e-10, limit=400)
        total += val
    return total


# ---------------------------------------------------------------------------
# elliptic integrals (parameter convention: K(m) = F(pi/2 | m))

def elliptic_k(m: float, cutoff: float = 1e-14) -> float:
    """Complete elliptic integral of the first kind via the arithmetic-geometric
    mean, parameter convention. Diverges as m -> 1-, flagged beyond `cutoff`."""
    if m >= 1.0 or 1.0 - m < cutoff:
        raise ValueError(f"K(m) diverges as m -> 1; got m={m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    while abs(a - b) > 1e-12 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def _carlson_rf(x: float, y: float, z: float) -> float:
    """Carlson symmetric form R_F by the duplication theorem."""
    for _ in range(200):
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
        mean = (x + y + z) / 3.0
        if max(abs(x - mean), abs(y - mean), abs(z - mean)) < 1e-14 * mean:
            break
    mean = (x + y + z) / 3.0
    dx, dy, dz = 1 - x / mean, 1 - y / mean, 1 - z / mean
    e2 = dx * dy + dy * dz + dz * dx
    e3 = dx * dy * dz
    return (1.0 + e2 * (e2 / 24.0 - 0.1) + e3 / 14.0) / math.sqrt(mean)


def elliptic_f(phi: float, m: float) -> float:
    """Incomplete elliptic integral F(phi | m) = int_0^phi dt/sqrt(1 - m sin^2 t).

    The m > 1 case is routed through the reciprocal-parameter identity
    F(phi | m) = m^{-1/2} F(arcsin(sqrt(m) sin phi) | 1/m), valid while
    sqrt(m) sin(phi) <= 1; at equality it reduces to the complete integral.
    """
    if not 0.0 <= phi <= math.pi / 2 + 1e-12:
        raise ValueError("phi must lie in [0, pi/2]")
    if m > 1.0:
        s = math.sqrt(m) * math.sin(phi)
        if s > 1.0 + 1e-12:
            raise ValueError(f"F(phi|m) complex for sqrt(m) sin(phi) = {s} > 1")
        return (1.0 / math.sqrt(m)) * elliptic_f(math.asin(min(s, 1.0)), 1.0 / m)
    sin_phi = math.sin(phi)
    cos2 = max(1.0 - sin_phi ** 2, 0.0)
    arg = 1.0 - m * sin_phi ** 2
    if arg < 0.0:
        raise ValueError("1 - m sin^2(phi) < 0")
    if arg == 0.0:
        raise ValueError("F diverges at m sin^2(phi) = 1")
    return sin_phi * _carlson_rf(cos2, arg, 1.0)


# ---------------------------------------------------------------------------
# validation helpers and exports

def quantum_per_spin_energies(j: int, h: float, gamma_x: float = 1.0) -> np.ndarray:
    """Eigenvalues of H/Omega divided by j: the quantum spectrum on the
    classical energy-per-spin axis (dense diagonalization)."""
    from .hamiltonian import LmgParams, build_lmg
    hm = build_lmg(j, LmgParams(h=h, gamma_x=gamma_x))
    return np.linalg.eigvalsh(hm) / j


def write_dos_csv(path, result: DosResult) -> None:
    rows = [(e, r, reg) for e, r, reg in zip(result.energies, result.rho, result.regions)]
    lines = ["E,rho,region"]
    for e, r, reg in rows:
        lines.append(f"{fileio.fmt(e)},{fileio.fmt(r)},{reg}")
    from pathlib import Path
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_surface_csv(path, h_over_gamma_x_grid, theta_grid, phi: float = 0.0) -> None:
    """Gridded E(theta)/j values per h/gx for the surface heat map."""
    rows = []
    for r in h_over_gamma_x_grid:
        surf = EnergySurface(h=r, gamma_x=1.0)
        for th in theta_grid:
            rows.append((r, th, surf(th, phi)))
    fileio.write_csv(path, ("h_over_gamma_x", "theta", "energy_per_spin"), rows)
