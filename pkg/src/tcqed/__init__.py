"""Driven Tavis-Cummings cavity QED toolkit.

Steady states of the Lindblad master equation, closed-form polariton and
witness dispersive-shift ladders, photon-number-resolving spectrum synthesis
and inverse analysis, and drive-amplitude calibration.
"""

from .hilbert import (
    CompositeSpace,
    DensityState,
    OperatorMatrix,
    PhotonDistribution,
    annihilation,
    cavity_distribution,
    creation,
    embed,
    expectation,
    identity,
    lowering_emitter,
    number,
    partial_trace,
)
from .model import (
    CollapseSet,
    DriveSpec,
    EmitterSpec,
    SystemSpec,
    WitnessSpec,
    build_collapse_set,
    build_dispersive,
    build_rotating_frame,
    build_tc_hamiltonian,
    chi,
    chi_tls,
    lamb_shifted_freq,
    total_excitation_number,
)
from .eigenstructure import (
    EigenLadder,
    ManifoldHamiltonian,
    blockade_detuning,
    build_ladder,
    dispersive_line_shifts,
    detuned_line_shifts,
    manifold_hamiltonian,
    n2_line_shift,
    polariton_frequencies,
    resonant_line_shifts,
    witness_backaction,
    witness_shift,
    witness_shift_closed_form,
    witness_shift_numeric,
    witness_transition_overlap,
)
from .dynamics import (
    Liouvillian,
    SteadyStateResult,
    build_liouvillian,
    evolve,
    g2_from_state,
    gm_from_distribution,
    steadystate,
)
from .pnr import (
    PeakSet,
    PnrSpectrum,
    RabiFit,
    analyze_spectrum,
    assign_photon_numbers,
    calibrate_drive,
    distribution_from_peaks,
    find_peaks,
    fit_rabi,
    g2_from_spectrum,
    load_spectrum_csv,
    save_spectrum_csv,
    synthesize_spectrum,
)
from .experiments import ExperimentConfig, SweepResult, run_experiment

__version__ = "0.1.0"
