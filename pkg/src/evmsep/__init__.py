"""Separability feasibility tests for qubit-mode prepare-and-measure QKD data.

Given the measurable record of a two-signal prepare-and-measure run (a priori
probabilities, the sender's coherence, and the receiver's conditional moment
matrices), decide whether any separable joint state could have produced the
data.  The decision is a linear-matrix-inequality feasibility problem over the
unknown entries of the bipartite expectation value matrix; an infeasible
answer certifies entanglement and is always accompanied by an auditable dual
certificate.
"""

from .evm import (
    DataError,
    LmiSystem,
    ModeEVM,
    ProblemData,
    QubitDensity,
    Variant,
    assemble_bipartite_evm,
    commutator_form,
    conditional_mode_evm,
    free_param_names,
    gaussian_mode_evm,
    mode_evm_valid,
    partial_transpose_qubit,
    separability_lmi,
    symmetrize,
)
from .linalg import ConvergenceError, is_psd, jacobi_eigh, min_eig, real_embedding
from .scan import BoundaryPoint, ScanConfig, ScanResult, boundary_sigma, run_scan, scenario_from_axes
from .scenario import (
    CoherentScenario,
    PureOutcomeResult,
    build_problem,
    coherence_from_overlap,
    pure_outcome_entanglement_check,
    separable_fixture,
)
from .solver import (
    CertificateCheck,
    DualCertificate,
    SolverOptions,
    Verdict,
    VerdictKind,
    brute_force_probe,
    solve_feasibility,
    verify_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryPoint",
    "CertificateCheck",
    "CoherentScenario",
    "ConvergenceError",
    "DataError",
    "DualCertificate",
    "LmiSystem",
    "ModeEVM",
    "ProblemData",
    "PureOutcomeResult",
    "QubitDensity",
    "ScanConfig",
    "ScanResult",
    "SolverOptions",
    "Variant",
    "Verdict",
    "VerdictKind",
    "assemble_bipartite_evm",
    "boundary_sigma",
    "brute_force_probe",
    "build_problem",
    "coherence_from_overlap",
    "commutator_form",
    "conditional_mode_evm",
    "free_param_names",
    "gaussian_mode_evm",
    "is_psd",
    "jacobi_eigh",
    "min_eig",
    "mode_evm_valid",
    "partial_transpose_qubit",
    "pure_outcome_entanglement_check",
    "real_embedding",
    "run_scan",
    "scenario_from_axes",
    "separability_lmi",
    "separable_fixture",
    "solve_feasibility",
    "symmetrize",
    "verify_certificate",
]
