"""Direct characterization of quantum operations with a probe qubit.

A control qubit selects between two conditional evolutions of a system
(optionally coupled to an environment). Single expectation values of the
probe, conditioned on system and environment projectors, give individual
matrix elements of Kraus operators, POVM elements, unitaries, observables and
density matrices.
"""

__version__ = "0.1.0"

from . import characterize, harness, matcore, protocol, quantum  # noqa: E402
from .characterize import (  # noqa: E402
    ObservableEstimatorConfig,
    Reconstruction,
    Setup,
    density_full,
    full_reconstruction,
    kraus_full,
    kraus_set_full,
    observable_full,
    povm_full,
    unitary_full,
)
from .harness import ExperimentConfig, ExperimentReport, run_experiment, sweep_delta_theta, sweep_shots  # noqa: E402
from .protocol import ProtocolInstance, evolve, exact_expectation, lhs_oracle, sampled_expectation  # noqa: E402
from .quantum import (  # noqa: E402
    DensityMatrix,
    Dilation,
    KrausSet,
    ambiguous_kraus_pair,
    apply_channel,
    dilation_from_kraus,
    kraus_from_dilation,
    random_dilation,
)

__all__ = [
    "__version__",
    "characterize",
    "harness",
    "matcore",
    "protocol",
    "quantum",
    "ObservableEstimatorConfig",
    "Reconstruction",
    "Setup",
    "density_full",
    "full_reconstruction",
    "kraus_full",
    "kraus_set_full",
    "observable_full",
    "povm_full",
    "unitary_full",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "sweep_delta_theta",
    "sweep_shots",
    "ProtocolInstance",
    "evolve",
    "exact_expectation",
    "lhs_oracle",
    "sampled_expectation",
    "DensityMatrix",
    "Dilation",
    "KrausSet",
    "ambiguous_kraus_pair",
    "apply_channel",
    "dilation_from_kraus",
    "kraus_from_dilation",
    "random_dilation",
]
