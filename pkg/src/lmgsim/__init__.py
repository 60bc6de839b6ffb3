"""Pulse-level simulator of a transmon-qudit analog simulation of the
Lipkin-Meshkov-Glick model: drive synthesis, time evolution, measurement
protocols, and the semiclassical analysis, all validated against exact
diagonalization."""

__version__ = "0.1.0"

from .drive import (DriveSchedule, IqWaveform, Schedule, Segment, TransmonSpec,
                    lab_frame_hamiltonian, lmg_to_drive, synthesize_lab_waveforms)
from .evolve import (NoiseModel, PropagatorConfig, TrajectoryRecord, loschmidt_echo,
                     parity_expectation, propagate)
from .hamiltonian import (BasisMap, LabeledSpectrum, LmgParams, build_lmg, diagonalize,
                          gap, lmg_spectrum, parity_operator, sector_hamiltonian)
from .protocols import (RampSpec, RamseyResult, SpectrumEstimate, extract_peak,
                        run_dpt, run_esqpt, run_gap_ramsey, run_kibble_zurek,
                        run_order_parameter)
from .semiclassics import (EnergySurface, critical_energy, density_of_states,
                           dos_curve, elliptic_f, elliptic_k, ground_minima)
from .spin import (AngularMomentumSet, SpinState, build_angular_momentum,
                   definite_parity_jx2_eigenstate, husimi_q, jx_eigenstate,
                   spin_coherent_state)
