"""nvgyro: simulation and estimation toolkit for a diamond nuclear-spin gyroscope.

Subpackages by responsibility:

* :mod:`nvgyro.spincore` - spin-1 bases, Hamiltonians, exact propagation, pulses
* :mod:`nvgyro.sequence` - Ramsey / echo sequences and the electron readout mapping
* :mod:`nvgyro.threeaxis` - four-family forward model and rotation-vector inversion
* :mod:`nvgyro.noise` - OU dephasing, NV-T1 factor, dipolar bath decoherence
* :mod:`nvgyro.sensor` - polarization transfer, readout efficiency, sensitivity budget
* :mod:`nvgyro.cli` - deterministic command-line front end
"""

from .spincore import (
    NUCLEAR_BASIS,
    JOINT_BASIS,
    LevelBasis,
    NuclearTransition,
    OperatorMatrix,
    PhysicalConstants,
    SpinState,
    build_joint_hamiltonian,
    build_nuclear_hamiltonian,
    propagate,
    rf_pulse_unitary,
)
from .sequence import (
    RamseyResult,
    SequenceTiming,
    echo_unitary,
    electron_signal,
    map_to_electron,
    run_echo_aligned,
    run_ramsey_aligned,
)
from .threeaxis import (
    FAMILIES,
    EstimationResult,
    NVFamily,
    RotationSpec,
    estimate_rotation,
    forward_model,
    run_ramsey_tilted,
    tilted_pulse_geometry,
)
from .noise import (
    BathModel,
    CoherenceCurve,
    NoiseModel,
    OUProcess,
    SequenceKind,
    bath_coherence_simulation,
    dephased_ramsey_coherence,
    nv_t1_dephasing_factor,
    sample_ou_path,
)
from .sensor import (
    PolarizationDrive,
    ReadoutModel,
    SensitivityBudget,
    detection_efficiency,
    polarization_time,
    sensitivity,
    sensitivity_vs_density,
    simulate_polarization_transfer,
)

__version__ = "0.1.0"
