"""Transient energy analysis for multi-machine swing models.

Simulates the classical model through a fault sequence, tracks individual
and superimposed machine energies in the center-of-inertia frame, locates
the characteristic events (SMPP, IDSP, IDLP), solves equilibria, computes
energy margins, and searches critical clearing times.
"""

__version__ = "0.1.0"

from .errors import (
    BracketError,
    CensoredError,
    ClassificationError,
    MarginError,
    ReductionError,
    ScenarioError,
    SolverError,
)
from .kernels import BACKEND
from .model import (
    FaultSpec,
    Machine,
    NetworkStage,
    ReducedNetworkSet,
    Scenario,
    SimSettings,
    bundled_scenario,
    bundled_scenario_path,
    electrical_power,
    kron_reduce,
    load_scenario,
    scenario_from_dict,
)
from .simulator import (
    CoiState,
    Trajectory,
    accelerating_power,
    coi_transform,
    integrate,
    kimbark_trace,
    trajectory_to_csv,
    write_trajectory_csv,
)
from .energy import (
    EnergyEvent,
    EnergyTrace,
    GridSpec,
    PesGrid,
    conservation_report,
    divergence_check,
    energy_trace_to_csv,
    events_to_json_dict,
    find_idsp_idlp,
    find_smpp,
    machine_energy_trace,
    pes_sample,
    pes_to_csv,
    residual_decomposition,
)
from .equilibria import (
    EquilibriumPoint,
    Margin,
    SctpEnergy,
    coi_jacobian,
    linear_trajectory,
    margin,
    pe_jacobian,
    sctp_energy,
    solve_sep,
    solve_uep,
    uep_energy,
)
from .assessment import (
    AssessmentReport,
    CctResult,
    ComparativeReport,
    MachineVerdict,
    SuperimposedVerdict,
    SystemVerdict,
    build_report,
    comparative_report,
    find_cct,
    individual_verdicts,
    report_to_json_dict,
    report_to_text,
    superimposed_verdict,
    system_verdict,
)

__all__ = [
    "__version__",
    "BACKEND",
    # errors
    "BracketError",
    "CensoredError",
    "ClassificationError",
    "MarginError",
    "ReductionError",
    "ScenarioError",
    "SolverError",
    # model
    "FaultSpec",
    "Machine",
    "NetworkStage",
    "ReducedNetworkSet",
    "Scenario",
    "SimSettings",
    "bundled_scenario",
    "bundled_scenario_path",
    "electrical_power",
    "kron_reduce",
    "load_scenario",
    "scenario_from_dict",
    # simulator
    "CoiState",
    "Trajectory",
    "accelerating_power",
    "coi_transform",
    "integrate",
    "kimbark_trace",
    "trajectory_to_csv",
    "write_trajectory_csv",
    # energy
    "EnergyEvent",
    "EnergyTrace",
    "GridSpec",
    "PesGrid",
    "conservation_report",
    "divergence_check",
    "energy_trace_to_csv",
    "events_to_json_dict",
    "find_idsp_idlp",
    "find_smpp",
    "machine_energy_trace",
    "pes_sample",
    "pes_to_csv",
    "residual_decomposition",
    # equilibria
    "EquilibriumPoint",
    "Margin",
    "SctpEnergy",
    "coi_jacobian",
    "linear_trajectory",
    "margin",
    "pe_jacobian",
    "sctp_energy",
    "solve_sep",
    "solve_uep",
    "uep_energy",
    # assessment
    "AssessmentReport",
    "CctResult",
    "ComparativeReport",
    "MachineVerdict",
    "SuperimposedVerdict",
    "SystemVerdict",
    "build_report",
    "comparative_report",
    "find_cct",
    "individual_verdicts",
    "report_to_json_dict",
    "report_to_text",
    "superimposed_verdict",
    "system_verdict",
]
