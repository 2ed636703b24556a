"""Synthetic scenarios, replicated runs and population-limit oracles."""

from .limits import (
    PopulationLimits,
    fdr_infinity,
    oracle_fdr,
    oracle_fdr_numerator,
    scenario_limits,
    two_sided_normal_limits,
)
from .runner import (
    MethodAggregate,
    ReplicationSummary,
    SimulationResult,
    aggregates_tsv,
    appendix_bj_scenarios,
    appendix_t4_scenarios,
    conservativeness_gap,
    run_replications,
)
from .scenarios import (
    Scenario,
    ScenarioConfig,
    SignalModel,
    Truth,
    generate_bj_scenario,
    generate_t4_scenario,
)
