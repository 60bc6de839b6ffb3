"""State propagation under the effective (rotating-frame) or lab-frame
Hamiltonian, optionally with per-transition amplitude damping.

Unitary paths evolve a state vector; decoherence switches to a density matrix
under the Lindblad equation with collapse operators sqrt(1/T1_n) |n-1><n|.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import fileio
from .drive import DriveSchedule, TransmonSpec, lab_frame_hamiltonian, rotating_frame_phases
from .hamiltonian import BasisMap

ROTATING = "rotating"
LAB = "lab"
PIECEWISE_EXPM = "piecewise_expm"
ADAPTIVE_RK = "adaptive_rk"

#: stand-in mean T1 of the 0-1 transition; the measured per-transition means
#: are device configuration, not derivable here, so they stay overridable
T1_BASE_SECONDS = 80e-6


@dataclass(frozen=True)
class PropagatorConfig:
    method: str = PIECEWISE_EXPM
    frame: str = ROTATING
    step: float = 1e-9           # piecewise step, seconds
    rel_tol: float = 1e-10       # adaptive methods
    max_step: float | None = None

    def __post_init__(self):
        if self.method not in (PIECEWISE_EXPM, ADAPTIVE_RK):
            raise ValueError(f"unknown method {self.method!r}")
        if self.frame not in (ROTATING, LAB):
            raise ValueError(f"unknown frame {self.frame!r}")
        if not 1e-13 <= self.rel_tol <= 1e-6:
            raise ValueError("rel_tol must lie in [1e-13, 1e-6]")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.frame == LAB and self.method != ADAPTIVE_RK:
            raise ValueError("lab-frame propagation uses the adaptive RK method")


def lab_default_config() -> PropagatorConfig:
    # carrier periods are ~0.2 ns; 2 ps caps the step well below that
    return PropagatorConfig(method=ADAPTIVE_RK, frame=LAB, rel_tol=1e-10, max_step=2e-12)


@dataclass(frozen=True)
class NoiseModel:
    """Amplitude-damping T1 per transition n -> n-1 (seconds, index n-1)."""

    t1_per_transition: np.ndarray
    enabled: bool = True

    def __post_init__(self):
        t1 = np.asarray(self.t1_per_transition, dtype=float)
        if self.enabled and not np.all(t1 > 0):
            raise ValueError("all T1 must be positive when noise is enabled")
        t1.setflags(write=False)
        object.__setattr__(self, "t1_per_transition", t1)

    @classmethod
    def default_table(cls, d: int, enabled: bool = True) -> "NoiseModel":
        n = np.arange(1, d, dtype=float)
        return cls(T1_BASE_SECONDS / n, enabled=enabled)


@dataclass
class TrajectoryRecord:
    """Sampled populations, parity, and optional overlaps along one evolution."""

    times: np.ndarray
    populations: np.ndarray            # (n_times, dim)
    parity: np.ndarray                 # (n_times,)
    overlaps: dict = field(default_factory=dict)
    states: np.ndarray | None = None   # (n_times, dim) when requested (unitary only)
    final_state: np.ndarray | None = None
    final_density: np.ndarray | None = None

    def echo(self, name: str = "initial") -> np.ndarray:
        series = np.asarray(self.overlaps[name])
        if np.iscomplexobj(series):
            return np.abs(series) ** 2
        return series.copy()


def parity_expectation(populations, basis_map_or_signs) -> np.ndarray | float:
    """Sum of (+/-1 by parity) weighted populations; scalar in [-1, 1] per sample."""
    if isinstance(basis_map_or_signs, BasisMap):
        signs = basis_map_or_signs.parity_signs_transmon()
    else:
        signs = np.asarray(basis_map_or_signs, dtype=float)
    populations = np.asarray(populations, dtype=float)
    out = populations @ signs
    return float(out) if out.ndim == 0 else out


def loschmidt_echo(initial: np.ndarray, traj: TrajectoryRecord,
                   name: str = "initial") -> np.ndarray:
    """Return probability |<psi(0)|psi(t)>|^2 from the recorded overlaps."""
    del initial  # the overlap series already references it
    return traj.echo(name)


def _hermitian_step(h: np.ndarray, dt: float, state: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return v @ (np.exp(-1j * w * dt) * (v.conj().T @ state))


def _segment_substep_bound(drive: DriveSchedule, i_seg: int) -> float:
    """Piecewise step bound 1 / (32 * max instantaneous eigenfrequency)."""
    t0 = drive.schedule.boundaries[i_seg]
    t1 = drive.schedule.boundaries[i_seg + 1]
    fmax = 0.0
    for t in (t0, 0.5 * (t0 + t1), min(t1, drive.duration)):
        w = np.linalg.eigvalsh(drive.hamiltonian(min(t, drive.duration)))
        fmax = max(fmax, np.max(np.abs(w)) / (2 * np.pi))
    return np.inf if fmax == 0 else 1.0 / (32.0 * fmax)


def _piecewise_unitary(drive: DriveSchedule, psi0: np.ndarray, times: np.ndarray,
                       cfg: PropagatorConfig, collect):
    psi = psi0.astype(complex)
    bounds = {i: _segment_substep_bound(drive, i) for i in range(len(drive.schedule.segments))}
    t_now = 0.0
    for k_sample, t_target in enumerate(times):
        if t_target < t_now - 1e-18:
            raise ValueError("sample times must be non-decreasing")
        while t_now < t_target - 1e-18:
            i_seg = drive.schedule.segment_index(t_now)
            seg_end = drive.schedule.boundaries[i_seg + 1]
            t_stop = min(t_target, seg_end)
            span = t_stop - t_now
            step = min(cfg.step, bounds[i_seg])
            n_sub = max(1, int(np.ceil(span / step - 1e-12)))
            dt = span / n_sub
            for k in range(n_sub):
                h = drive.hamiltonian(t_now + (k + 0.5) * dt)
                psi = _hermitian_step(h, dt, psi)
            t_now = t_stop
        collect(k_sample, psi)
    return psi


def _adaptive_unitary(drive: DriveSchedule, psi0: np.ndarray, times: np.ndarray,
                      cfg: PropagatorConfig, collect, hamiltonian=None):
    h_of_t = hamiltonian or drive.hamiltonian

    def rhs(t, y):
        return -1j * (h_of_t(t) @ y)

    psi = psi0.astype(complex)
    t_now = 0.0
    seg_bounds = drive.schedule.boundaries
    kwargs = {} if cfg.max_step is None else {"max_step": cfg.max_step}
    for k_sample, t_target in enumerate(times):
        while t_now < t_target - 1e-18:
            i_seg = drive.schedule.segment_index(t_now)
            t_stop = min(t_target, seg_bounds[i_seg + 1])
            sol = solve_ivp(rhs, (t_now, t_stop), psi, method="DOP853",
                            rtol=cfg.rel_tol, atol=1e-13, **kwargs)
            if not sol.success:
                raise RuntimeError(f"propagation failed: {sol.message}")
            psi = sol.y[:, -1]
            t_now = t_stop
        collect(k_sample, psi)
    return psi


def _lindblad_rhs_factory(h_of_t, t1: np.ndarray, dim: int):
    rates = 1.0 / t1[: dim - 1]

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        h = h_of_t(t)
        out = -1j * (h @ rho - rho @ h)
        # L_n = |n-1><n| : gain into (n-1,n-1), loss on row/col n
        for n in range(1, dim):
            g = rates[n - 1]
            out[n - 1, n - 1] += g * rho[n, n]
            out[n, :] -= 0.5 * g * rho[n, :]
            out[:, n] -= 0.5 * g * rho[:, n]
        return out.ravel()

    return rhs


def _lindblad(drive: DriveSchedule, psi0: np.ndarray, times: np.ndarray,
              cfg: PropagatorConfig, noise: NoiseModel, collect_rho):
    dim = drive.dim
    rho = np.outer(psi0, psi0.conj()).astype(complex)
    rhs = _lindblad_rhs_factory(drive.hamiltonian, noise.t1_per_transition, dim)
    t_now = 0.0
    rtol = max(cfg.rel_tol, 1e-10)
    for k_sample, t_target in enumerate(times):
        while t_now < t_target - 1e-18:
            i_seg = drive.schedule.segment_index(t_now)
            t_stop = min(t_target, drive.schedule.boundaries[i_seg + 1])
            sol = solve_ivp(rhs, (t_now, t_stop), rho.ravel(), method="DOP853",
                            rtol=rtol, atol=1e-12)
            if not sol.success:
                raise RuntimeError(f"Lindblad propagation failed: {sol.message}")
            rho = sol.y[:, -1].reshape(dim, dim)
            t_now = t_stop
        collect_rho(k_sample, rho)
    return rho


def propagate(initial: np.ndarray, drive: DriveSchedule, times,
              config: PropagatorConfig | None = None,
              noise: NoiseModel | None = None,
              overlap_with: dict | None = None,
              store_states: bool = False,
              transmon: TransmonSpec | None = None) -> TrajectoryRecord:
    """Propagate `initial` (transmon-basis amplitudes) under the drive schedule.

    `times` are the sample instants (seconds, ascending, within the schedule).
    `overlap_with` maps names to reference vectors; the record stores
    <ref|psi(t)> (complex) for unitary runs and <ref|rho|ref> for noisy runs.
    The initial state itself is always recorded under "initial".
    """
    cfg = config or PropagatorConfig()
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0 or times[0] < 0 or times[-1] > drive.duration * (1 + 1e-12) + 1e-15:
        raise ValueError("sample times must lie within the schedule support")
    psi0 = np.asarray(initial, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")
    if psi0.size != drive.dim:
        raise ValueError("state dimension does not match the drive schedule")
    refs = {"initial": psi0}
    refs.update(overlap_with or {})
    signs = drive.parity_signs()

    use_noise = noise is not None and noise.enabled
    if use_noise and cfg.frame == LAB:
        raise ValueError("decoherence is modeled in the rotating frame only")

    n_t = times.size
    pops = np.empty((n_t, drive.dim))
    par = np.empty(n_t)
    ovl = {k: np.empty(n_t, dtype=(float if use_noise else complex)) for k in refs}
    states = np.empty((n_t, drive.dim), dtype=complex) if (store_states and not use_noise) else None

    def collect(k, psi):
        pops[k] = np.abs(psi) ** 2
        par[k] = float(pops[k] @ signs)
        for name, ref in refs.items():
            ovl[name][k] = ref.conj() @ psi
        if states is not None:
            states[k] = psi

    def collect_rho(k, rho):
        tr = rho.trace().real
        if abs(tr - 1.0) > 1e-6:
            raise RuntimeError(f"Lindblad trace drifted to {tr}")
        pops[k] = np.clip(np.diagonal(rho).real, 0.0, None)
        par[k] = float(np.diagonal(rho).real @ signs)
        for name, ref in refs.items():
            ovl[name][k] = float((ref.conj() @ rho @ ref).real)

    if use_noise:
        rho_f = _lindblad(drive, psi0, times, cfg, noise, collect_rho)
        ev = np.linalg.eigvalsh(rho_f)
        if ev.min() < -1e-8:
            raise RuntimeError(f"density matrix lost positivity: min eig {ev.min()}")
        return TrajectoryRecord(times, pops, par, ovl, None, None, rho_f)

    if cfg.frame == LAB:
        if transmon is None:
            transmon = TransmonSpec.table_default(drive.dim)
        h_lab = lambda t: lab_frame_hamiltonian(drive, transmon, t)
        psi_f = _adaptive_unitary(drive, psi0, times, cfg, collect, hamiltonian=h_lab)
    elif cfg.method == PIECEWISE_EXPM:
        psi_f = _piecewise_unitary(drive, psi0, times, cfg, collect)
    else:
        psi_f = _adaptive_unitary(drive, psi0, times, cfg, collect)

    norm = np.linalg.norm(psi_f)
    if abs(norm - 1.0) > 1e-9:
        raise RuntimeError(f"norm drifted to {norm}")
    return TrajectoryRecord(times, pops, par, ovl, states, psi_f, None)


def to_rotating_frame(psi_lab: np.ndarray, drive: DriveSchedule,
                      spec: TransmonSpec, t: float) -> np.ndarray:
    """Apply R(t) to a lab-frame state so it can be compared with Eq.-5 evolution."""
    return np.exp(1j * rotating_frame_phases(drive, spec, t)) * psi_lab


def ramp_unitary(drive: DriveSchedule, t0: float = 0.0, t1: float | None = None,
                 rel_tol: float = 1e-11) -> np.ndarray:
    """Propagator U(t1, t0) for the drive's effective Hamiltonian.

    Integrates the matrix Schroedinger equation segment by segment; protocols
    cache these for ramps that are identical across many Ramsey delays.
    """
    t1 = drive.duration if t1 is None else t1
    dim = drive.dim
    u = np.eye(dim, dtype=complex)
    if t1 <= t0:
        return u

    def rhs(t, y):
        return (-1j * (drive.hamiltonian(t) @ y.reshape(dim, dim))).ravel()

    t_now = t0
    while t_now < t1 - 1e-18:
        i_seg = drive.schedule.segment_index(t_now)
        t_stop = min(t1, drive.schedule.boundaries[i_seg + 1])
        sol = solve_ivp(rhs, (t_now, t_stop), u.ravel(), method="DOP853",
                        rtol=rel_tol, atol=1e-13)
        if not sol.success:
            raise RuntimeError(f"ramp propagation failed: {sol.message}")
        u = sol.y[:, -1].reshape(dim, dim)
        t_now = t_stop
    return u


def hold_unitary(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i H dt) for a constant Hermitian H (rad/s)."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def write_trajectory_csv(traj: TrajectoryRecord, path, include_echo: bool = True) -> None:
    dim = traj.populations.shape[1]
    header = ["t_seconds"] + [f"p_{n}" for n in range(dim)] + ["parity"]
    echo = None
    if include_echo and "initial" in traj.overlaps:
        header.append("echo")
        echo = traj.echo("initial")
    rows = []
    for k, t in enumerate(traj.times):
        row = [t, *traj.populations[k], traj.parity[k]]
        if echo is not None:
            row.append(echo[k])
        rows.append(row)
    fileio.write_csv(path, header, rows)
