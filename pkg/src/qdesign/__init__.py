"""qdesign: design and analysis toolkit for flux-tunable concentric transmons."""

from .circuit import (
    CircuitParams,
    EffectiveEnergies,
    LevelSpectrum,
    diagonalize,
    effective_energies,
    ej_at_phase,
    ej_of_flux,
    frequency_vs_bias,
    transmon_levels,
)
from .dynamics import (
    PulseSequence,
    QubitNoiseParams,
    Segment,
    ZControlCalibration,
    evolve,
    extract_decay,
    ramsey_experiment,
    simulate_z_precession,
    t1_experiment,
)
from .loss import (
    LossBudget,
    PurcellInputs,
    TlfModel,
    budget,
    loss_tangent_rate,
    purcell_capacitive,
    purcell_inductive,
    purcell_single_mode,
    tlf_rate,
)
from .magnetics import (
    CouplingEstimate,
    GradiometricLoop,
    Polyline,
    flux_per_current,
    gradiometric_mutual,
    neumann_mutual,
    z_coupling,
)
from .spectrofit import (
    FitResult,
    MultiphotonSet,
    SpectroscopyDataset,
    fit_flux_spectrum,
    ingest_csv,
    joint_fit,
    solve_sweet_spot,
)

__version__ = "0.1.0"

__all__ = [
    "CircuitParams", "EffectiveEnergies", "LevelSpectrum", "diagonalize",
    "effective_energies", "ej_at_phase", "ej_of_flux", "frequency_vs_bias",
    "transmon_levels", "PulseSequence", "QubitNoiseParams", "Segment",
    "ZControlCalibration", "evolve", "extract_decay", "ramsey_experiment",
    "simulate_z_precession", "t1_experiment", "LossBudget", "PurcellInputs",
    "TlfModel", "budget", "loss_tangent_rate", "purcell_capacitive",
    "purcell_inductive", "purcell_single_mode", "tlf_rate", "CouplingEstimate",
    "GradiometricLoop", "Polyline", "flux_per_current", "gradiometric_mutual",
    "neumann_mutual", "z_coupling", "FitResult", "MultiphotonSet",
    "SpectroscopyDataset", "fit_flux_spectrum", "ingest_csv", "joint_fit",
    "solve_sweet_spot",
]
