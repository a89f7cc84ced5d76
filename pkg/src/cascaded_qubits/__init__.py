"""Simulator for a cascaded pair of qubits coupled by one-way photon exchange.

Layers:

* :mod:`~cascaded_qubits.numerics` -- small dense eigendecomposition and
  exact propagators.
* :mod:`~cascaded_qubits.model` -- system operators, Liouvillian, and the
  closed-form no-jump eigensystem.
* :mod:`~cascaded_qubits.master` -- unconditional density-matrix evolution,
  steady states, relaxation times.
* :mod:`~cascaded_qubits.trajectory` -- conditional photon-counting
  trajectories with exact waiting-time sampling.
* :mod:`~cascaded_qubits.analysis` -- Bell decompositions, entanglement
  entropy, analytic jump oracles, ensemble statistics.
* :mod:`~cascaded_qubits.cli` -- reproducible experiment runner emitting
  JSON/CSV/SVG artifacts.
"""

from .errors import (
    AnnihilatedState,
    BisectionFailure,
    DegenerateSteadyState,
    EmptyClass,
    GridMismatch,
    InvalidParams,
    InvalidState,
    NonDiagonalizable,
    NonFinite,
    SimulationError,
    Unsupported,
    ZeroRate,
)
from .model import (
    BELL_STATES,
    KET_00,
    KET_01,
    KET_10,
    KET_11,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    ModelOperators,
    SystemParams,
    build_liouvillian,
    build_operators,
    named_state,
    nojump_eigensystem,
)
from .master import (
    SpectrumReport,
    SteadyState,
    evolve_density,
    expectation_sigmazz,
    relaxation_time,
    steady_state,
)
from .trajectory import (
    ClickEvent,
    CycleClass,
    CycleTag,
    TrajectoryRecord,
    apply_jump,
    classify_asymptotics,
    run_ensemble,
    run_trajectory,
    sample_waiting_time,
    select_channel,
)
from .analysis import (
    BellDecomposition,
    EnsembleReport,
    bell_decompose,
    correlated_projection,
    cycle_mixture,
    ensemble_average,
    entanglement_entropy,
    jump_probability_oracle,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
