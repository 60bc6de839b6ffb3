"""Drive synthesis: from a time-dependent LMG parameter schedule to the
per-transition detunings/amplitudes of the effective rotating-frame
Hamiltonian, and onward to lab-frame IQ waveforms.

The effective Hamiltonian has the detunings Delta_n(t) on the diagonal and the
complex drive strengths Omega_n(t) on the first off-diagonals. Matching it to
the relabeled LMG Hamiltonian fixes every drive parameter:

    Delta_n(t)  = Omega(t) * H_nn(t),     Omega_n(t) = Omega(t) * H_{n-1,n}(t).

When the detunings vary in time, the phase reference of each drive slips
relative to the rotating frame by

    zeta_n(t) = (A_n - A_{n-1}) - (Delta_n - Delta_{n-1}) * t,
    A_n(t)    = int_0^t Delta_n dt',

and setting each drive phase to phi_n(t) = -zeta_n(t) cancels the slip, so the
off-diagonal entries stay exactly Omega_n(t). A_n is integrated in closed form
for both ramp shapes, keeping phase tracking free of quadrature error.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hamiltonian import BasisMap, LmgParams, _lmg_basis_matrices
from .spin import TRANSMON_BASIS

#: Table of measured single-photon transition frequencies f_{n,n+1} in GHz.
TABLE_TRANSITION_FREQS_GHZ = (4.870, 4.766, 4.658, 4.544, 4.424, 4.298, 4.163, 4.020)

LINEAR = "linear"
RAISED_COSINE = "raised_cosine"

_SHAPES = {
    LINEAR: (lambda u: u, lambda u: 0.5 * u * u),
    RAISED_COSINE: (
        lambda u: 0.5 * (1.0 - np.cos(np.pi * u)),
        lambda u: 0.5 * (u - np.sin(np.pi * u) / np.pi),
    ),
}


@dataclass(frozen=True)
class TransmonSpec:
    """Transmon level frequencies (omega_n/2pi, Hz, omega_0 = 0) and charge
    matrix elements gamma_n for n = 1..d-1."""

    level_freqs: np.ndarray
    charge_elements: np.ndarray

    def __post_init__(self):
        lf = np.asarray(self.level_freqs, dtype=float)
        ce = np.asarray(self.charge_elements, dtype=float)
        if lf[0] != 0.0:
            raise ValueError("level_freqs[0] must be 0 (reference)")
        trans = np.diff(lf)
        if not np.all(np.diff(trans) < 0):
            raise ValueError("transition frequencies must be strictly decreasing "
                             "(negative anharmonicity)")
        if ce.size != lf.size - 1:
            raise ValueError("need one charge element per transition")
        lf.setflags(write=False); ce.setflags(write=False)
        object.__setattr__(self, "level_freqs", lf)
        object.__setattr__(self, "charge_elements", ce)

    @classmethod
    def from_transition_freqs(cls, transition_freqs_hz, charge_elements=None) -> "TransmonSpec":
        trans = np.asarray(transition_freqs_hz, dtype=float)
        levels = np.concatenate([[0.0], np.cumsum(trans)])
        if charge_elements is None:
            # harmonic-oscillator approximation; only rescales lab amplitudes
            charge_elements = np.sqrt(np.arange(1, trans.size + 1, dtype=float))
        return cls(levels, np.asarray(charge_elements, dtype=float))

    @classmethod
    def table_default(cls, d: int = 9) -> "TransmonSpec":
        if d - 1 > len(TABLE_TRANSITION_FREQS_GHZ):
            raise ValueError(f"device table covers at most {len(TABLE_TRANSITION_FREQS_GHZ)+1} levels")
        freqs = np.array(TABLE_TRANSITION_FREQS_GHZ[: d - 1]) * 1e9
        return cls.from_transition_freqs(freqs)

    @property
    def d(self) -> int:
        return self.level_freqs.size

    @property
    def anharmonicity_hz(self) -> float:
        f = self.level_freqs
        return (f[2] - f[1]) - (f[1] - f[0])

    def omega_rad(self) -> np.ndarray:
        return 2 * np.pi * self.level_freqs


@dataclass(frozen=True)
class Segment:
    """One piece of the parameter schedule; h/gx/gy interpolate along `shape`,
    Omega is constant within the segment."""

    duration: float
    h0: float
    h1: float
    gx0: float
    gx1: float
    gy0: float = 0.0
    gy1: float = 0.0
    omega_over_2pi: float = 1.910e6
    shape: str = LINEAR

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("segment duration must be positive")
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown ramp shape {self.shape!r}")

    @property
    def omega_rad(self) -> float:
        return 2 * np.pi * self.omega_over_2pi


class Schedule:
    """Piecewise-smooth time dependence of the LMG parameters."""

    def __init__(self, segments):
        self.segments = tuple(segments)
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        self.boundaries = np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    @classmethod
    def hold(cls, params: LmgParams, duration: float) -> "Schedule":
        return cls([Segment(duration, params.h, params.h, params.gamma_x, params.gamma_x,
                            params.gamma_y, params.gamma_y, params.omega_over_2pi)])

    @property
    def duration(self) -> float:
        return float(self.boundaries[-1])

    def segment_index(self, t: float) -> int:
        if t < -1e-15 or t > self.duration * (1 + 1e-12) + 1e-15:
            raise ValueError(f"t={t} outside schedule support [0, {self.duration}]")
        i = int(np.searchsorted(self.boundaries, t, side="right")) - 1
        return min(max(i, 0), len(self.segments) - 1)

    def params_at(self, t: float) -> LmgParams:
        i = self.segment_index(t)
        seg = self.segments[i]
        u = (t - self.boundaries[i]) / seg.duration
        u = min(max(u, 0.0), 1.0)
        s = _SHAPES[seg.shape][0](u)
        return LmgParams(
            h=seg.h0 + (seg.h1 - seg.h0) * s,
            gamma_x=seg.gx0 + (seg.gx1 - seg.gx0) * s,
            gamma_y=seg.gy0 + (seg.gy1 - seg.gy0) * s,
            omega_over_2pi=seg.omega_over_2pi,
        )


class RwaGuardError(ValueError):
    """Drive amplitude too large relative to the anharmonicity for the RWA."""


def _sector_slice(j: int, sector: str) -> slice:
    if sector == "full":
        return slice(0, 2 * j + 1)
    if sector == "even":
        return slice(0, j + 1)
    if sector == "odd":
        return slice(j + 1, 2 * j + 1)
    raise ValueError(f"unknown sector {sector!r}")


class DriveSchedule:
    """Resolved per-transition drive program over one parity sector (or all of it).

    Provides the rotating-frame quantities Delta_n(t), Omega_n(t), A_n(t),
    zeta_n(t), phi_n(t) as functions of time, plus the assembled effective
    Hamiltonian. All time arguments are seconds from the schedule start.
    """

    def __init__(self, j: int, schedule: Schedule, basis_map: BasisMap | None = None,
                 sector: str = "full", sample_rate: float = 1e9):
        self.j = int(j)
        self.schedule = schedule
        self.basis_map = basis_map or BasisMap.standard(self.j)
        self.sector = sector
        self.sample_rate = float(sample_rate)
        sl = _sector_slice(self.j, sector)
        mz, mxx, myy = _lmg_basis_matrices(self.j, TRANSMON_BASIS)
        self._mz, self._mxx, self._myy = (a[sl, sl] for a in (mz, mxx, myy))
        self.dim = self._mz.shape[0]
        # per-segment affine pieces: diag(t) = om*(da + db*s(u)), offd likewise
        self._seg = []
        a_run = np.zeros(self.dim)
        for seg in schedule.segments:
            m0 = seg.h0 * self._mz + seg.gx0 * self._mxx + seg.gy0 * self._myy
            m1 = seg.h1 * self._mz + seg.gx1 * self._mxx + seg.gy1 * self._myy
            da, db = np.diagonal(m0).copy(), np.diagonal(m1 - m0).copy()
            oa, ob = np.diagonal(m0, 1).copy(), np.diagonal(m1 - m0, 1).copy()
            om = seg.omega_rad
            self._seg.append((om, da, db, oa, ob, a_run.copy(), seg))
            s_fn, s_int = _SHAPES[seg.shape]
            a_run = a_run + om * (da * seg.duration + db * seg.duration * s_int(1.0))

    @property
    def duration(self) -> float:
        return self.schedule.duration

    def _locate(self, t: float):
        i = self.schedule.segment_index(t)
        om, da, db, oa, ob, a0, seg = self._seg[i]
        tl = t - self.schedule.boundaries[i]
        u = min(max(tl / seg.duration, 0.0), 1.0)
        return om, da, db, oa, ob, a0, seg, tl, u

    def detunings(self, t: float) -> np.ndarray:
        """Delta_n(t) in rad/s, one per level."""
        om, da, db, _, _, _, seg, _, u = self._locate(t)
        return om * (da + db * _SHAPES[seg.shape][0](u))

    def amplitudes(self, t: float) -> np.ndarray:
        """Omega_n(t) in rad/s for n = 1..dim-1 (real-valued targets, signed)."""
        om, _, _, oa, ob, _, seg, _, u = self._locate(t)
        return (om * (oa + ob * _SHAPES[seg.shape][0](u))).astype(complex)

    def accumulated_phases(self, t: float) -> np.ndarray:
        """A_n(t) = int_0^t Delta_n dt', exact for both ramp shapes."""
        om, da, db, _, _, a0, seg, tl, u = self._locate(t)
        s_int = _SHAPES[seg.shape][1]
        return a0 + om * (da * tl + db * seg.duration * s_int(u))

    def zetas(self, t: float) -> np.ndarray:
        """Phase slip of drive n relative to its linearly-extrapolated reference.

        Identically zero while the detunings are constant. The sign is fixed
        so that phi_n = -zeta_n makes the drive phase track the frame exactly.
        """
        delta = self.detunings(t)
        acc = self.accumulated_phases(t)
        return (np.diff(acc)) - np.diff(delta) * t

    def drive_phases(self, t: float) -> np.ndarray:
        """phi_n(t) = -zeta_n(t)."""
        return -self.zetas(t)

    def hamiltonian(self, t: float) -> np.ndarray:
        """Effective rotating-frame Hamiltonian (rad/s) at time t."""
        h = np.diag(self.detunings(t)).astype(complex)
        amps = self.amplitudes(t)
        idx = np.arange(self.dim - 1)
        h[idx, idx + 1] = amps
        h[idx + 1, idx] = amps.conj()
        return h

    def parity_signs(self) -> np.ndarray:
        if self.sector == "full":
            return self.basis_map.parity_signs_transmon()
        return np.full(self.dim, 1.0 if self.sector == "even" else -1.0)

    def max_amplitude(self) -> float:
        """max_t max_n |Omega_n(t)|; exact since amplitudes are affine per segment."""
        worst = 0.0
        for om, _, _, oa, ob, _, seg in self._seg:
            for u in (0.0, 1.0):
                s = _SHAPES[seg.shape][0](u)
                worst = max(worst, float(np.max(np.abs(om * (oa + ob * s)), initial=0.0)))
        return worst

    def max_detuning_excursion(self) -> float:
        """max_t max_n |Delta~_n(t) - Delta~_n(0)| with Delta~ the transition detuning."""
        d0 = np.diff(self.detunings(0.0))
        worst = 0.0
        for om, da, db, _, _, _, seg in self._seg:
            for u in (0.0, 1.0):
                s = _SHAPES[seg.shape][0](u)
                dn = np.diff(om * (da + db * s))
                worst = max(worst, float(np.max(np.abs(dn - d0), initial=0.0)))
        return worst


def lmg_to_drive(j: int, schedule: Schedule, basis_map: BasisMap | None = None,
                 sector: str = "full", transmon: TransmonSpec | None = None,
                 rwa_guard_fraction: float = 0.1, sample_rate: float = 1e9) -> DriveSchedule:
    """Translate an LMG parameter schedule into the per-transition drive program.

    If a TransmonSpec is supplied (or the device table covers the dimension),
    reject schedules whose peak drive amplitude exceeds rwa_guard_fraction of
    the anharmonicity: beyond that the dropped terms are no longer negligible.
    """
    ds = DriveSchedule(j, schedule, basis_map, sector, sample_rate)
    if transmon is None and ds.dim <= len(TABLE_TRANSITION_FREQS_GHZ) + 1:
        transmon = TransmonSpec.table_default(ds.dim)
    if transmon is not None and rwa_guard_fraction is not None:
        alpha = 2 * np.pi * abs(transmon.anharmonicity_hz)
        peak = ds.max_amplitude()
        if peak > rwa_guard_fraction * alpha:
            raise RwaGuardError(
                f"peak drive amplitude {peak/2/np.pi:.3g} Hz exceeds "
                f"{rwa_guard_fraction:.3g} x |anharmonicity| = "
                f"{rwa_guard_fraction*alpha/2/np.pi:.3g} Hz")
    return ds


@dataclass(frozen=True)
class IqWaveform:
    """Sampled in-phase/quadrature envelopes per transition.

    The lab tone is reconstructed as
    V_n(t) = cos(beta_n t) vI_n(t) - sin(beta_n t) vQ_n(t), which equals
    E_n(t) cos(omega_n(t) t + phi_n(t)) identically.
    """

    times: np.ndarray
    v_i: np.ndarray                 # (n_transitions, n_samples)
    v_q: np.ndarray
    reference_freqs: np.ndarray     # beta_n, rad/s
    end_freq_updates: np.ndarray    # omega_n(t_end), rad/s
    end_phase_jumps: np.ndarray     # phi_n(t_end) - phi_n(0)
    sample_rate: float


def _drive_pieces(ds: DriveSchedule, spec: TransmonSpec, t: float):
    """(E_n, omega_drive_n, phi_n) at time t; E is the signed envelope."""
    gam = spec.charge_elements[: ds.dim - 1]
    amps = ds.amplitudes(t)
    if np.max(np.abs(amps.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(amps))):
        raise ValueError("complex drive targets need explicit phase handling")
    env = 2.0 * amps.real / gam
    bare = np.diff(spec.omega_rad()[: ds.dim])
    omega_drive = bare - np.diff(ds.detunings(t))
    phi = ds.drive_phases(t)
    return env, omega_drive, phi


def synthesize_lab_waveforms(ds: DriveSchedule, spec: TransmonSpec,
                             sample_rate: float | None = None) -> IqWaveform:
    """Decompose each drive tone against its fixed reference frequency beta_n.

    beta_n = (omega_n - omega_{n-1}) - (Delta_n(0) - Delta_{n-1}(0)); the slow
    residual delta_omega_n(t) and the phase correction phi_n(t) are absorbed
    into the I/Q envelopes. The end-of-pulse record carries the single
    instantaneous frequency and phase update that re-aligns the references
    with the frame at the end of the pulse.
    """
    if spec.d < ds.dim:
        raise ValueError("transmon spec has fewer levels than the drive schedule")
    rate = float(sample_rate or ds.sample_rate)
    env0, omega0, _ = _drive_pieces(ds, spec, 0.0)
    beta = omega0.copy()
    # aliasing guard: envelopes must be slow on the sample grid
    max_dw = ds.max_detuning_excursion()
    max_amp = ds.max_amplitude()
    need = 16.0 * max(max_dw, max_amp) / (2 * np.pi)
    if rate < need:
        raise ValueError(f"sample rate {rate:.3g} Hz below 16x envelope bandwidth {need:.3g} Hz")
    n = max(2, int(np.ceil(ds.duration * rate)) + 1)
    times = np.arange(n) / rate
    times[-1] = min(times[-1], ds.duration)
    v_i = np.empty((ds.dim - 1, n))
    v_q = np.empty((ds.dim - 1, n))
    for k, t in enumerate(times):
        env, omega_d, phi = _drive_pieces(ds, spec, t)
        arg = (omega_d - beta) * t + phi
        v_i[:, k] = env * np.cos(arg)
        v_q[:, k] = env * np.sin(arg)
    env_e, omega_e, phi_e = _drive_pieces(ds, spec, ds.duration)
    _, _, phi_s = _drive_pieces(ds, spec, 0.0)
    return IqWaveform(times, v_i, v_q, beta, omega_e, phi_e - phi_s, rate)


def lab_frame_hamiltonian(ds: DriveSchedule, spec: TransmonSpec, t: float) -> np.ndarray:
    """H_0 + H_drive(t) in the lab frame (rad/s).

    Every tone k drives the full charge-coupling ladder; selectivity comes from
    the frequency match alone. Used by the RWA-validation propagation path.
    """
    d = ds.dim
    if spec.d < d:
        raise ValueError("transmon spec has fewer levels than the drive schedule")
    env, omega_d, phi = _drive_pieces(ds, spec, t)
    v_total = float(np.sum(env * np.cos(omega_d * t + phi)))
    h = np.zeros((d, d), dtype=complex)
    np.fill_diagonal(h, spec.omega_rad()[:d])
    gam = spec.charge_elements[: d - 1]
    idx = np.arange(d - 1)
    h[idx, idx + 1] += v_total * gam
    h[idx + 1, idx] += v_total * gam
    return h


def rotating_frame_phases(ds: DriveSchedule, spec: TransmonSpec, t: float) -> np.ndarray:
    """Frame angles theta_n(t) = omega_n t - A_n(t); psi_rot = exp(i theta) * psi_lab."""
    return spec.omega_rad()[: ds.dim] * t - ds.accumulated_phases(t)


def write_waveforms(iq: IqWaveform, data_path, manifest_path) -> None:
    """Binary envelope dump (text preamble + little-endian float64 payload)
    plus a JSON manifest of the end-of-pulse updates."""
    data_path = Path(data_path)
    n_trans, n_samples = iq.v_i.shape
    preamble = json.dumps({
        "d": n_trans + 1,
        "sample_rate": iq.sample_rate,
        "n_samples": int(n_samples),
        "reference_freqs_rad": list(iq.reference_freqs),
        "layout": "vI then vQ per transition, transitions in order",
    }, sort_keys=True)
    payload = np.stack([iq.v_i, iq.v_q], axis=1).astype("<f8").tobytes()
    with open(data_path, "wb") as f:
        f.write(preamble.encode() + b"\n")
        f.write(payload)
    from . import fileio
    fileio.write_json(manifest_path, {
        "end_freq_updates_rad": list(iq.end_freq_updates),
        "end_phase_jumps": list(iq.end_phase_jumps),
        "reference_freqs_rad": list(iq.reference_freqs),
    })


def read_waveforms(data_path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Inverse of write_waveforms' binary part: (header, vI, vQ)."""
    raw = Path(data_path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    data = np.frombuffer(raw[nl + 1:], dtype="<f8")
    n_trans = header["d"] - 1
    n_samples = header["n_samples"]
    data = data.reshape(n_trans, 2, n_samples)
    return header, data[:, 0, :].copy(), data[:, 1, :].copy()
