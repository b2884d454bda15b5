"""Heralded two-mode mechanical Bell states in a pulsed optomechanical cavity.

Pipeline: a blue-detuned write pulse scatters a single Stokes photon into a
filter/detector mode; a click heralds the entangled single-phonon state
(g1|10> + g2|01>)/N across the two mechanical modes.  A later red-detuned
read pulse maps the phonons back to light, and the beat fringe in the
detected intensity versus readout delay measures the stored coherence.
"""

from .errors import (
    PhononBellError,
    CapacityError,
    ParameterError,
    StiffnessError,
    IntegrityError,
    NoClickError,
    DegenerateStateError,
    FitError,
)
from .modespace import (
    ModeSpace,
    OperatorMatrix,
    build_mode_space,
    ladder_operator,
    embed_projector,
    MODE_CAVITY,
    MODE_MECH1,
    MODE_MECH2,
    MODE_DETECTOR,
)
from .liouville import (
    SystemParams,
    PulseSpec,
    QuantumState,
    drive_envelope,
    assemble_hamiltonian,
    lindblad_rhs,
    static_liouvillian,
    thermal_state,
    propagate,
)
from .protocol import (
    ProtocolSchedule,
    SemiclassicalState,
    WriteTrajectory,
    ReadoutTrajectory,
    HeraldScan,
    run_write,
    herald_project,
    herald_probability,
    herald_scan,
    reduced_mechanical_state,
    prepare_readout_initial,
    run_readout,
    fringe_scan,
    heralded_mechanical_state,
)
from .observables import (
    TwoQubitState,
    VisibilityFit,
    FringeScan,
    partial_trace,
    two_qubit_restrict,
    concurrence,
    displaced_normal_moment,
    g2_zero_delay,
    visibility,
    visibility_free_frequency,
)
from .config import RunConfig
from .analytic import (
    PureWriteState,
    ExtraMode,
    bell_state,
    separable_state,
    analytic_intensity,
    analytic_concurrence,
    analytic_visibility,
    visibility_from_concurrence,
    dephasing_rate_estimate,
    dephasing_rate_single_mode,
)

__version__ = "0.1.0"
