from .attacks import (
    AttackSpec,
    apply_attack,
    apply_self_promotion,
    apply_slandering,
    apply_sybil,
    sybil_count,
)
from .experiments import KINDS, ExperimentReport, run_experiment, trial_seeds
from .generator import (
    GeneratorConfig,
    ToyScenarioConfig,
    fill_count,
    gen_matrix,
    sample_tau,
    toy_scenario,
)
