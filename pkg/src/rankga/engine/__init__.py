from rankga.engine.dynamics import (
    GAConfig,
    RandomBlock,
    TraceRecord,
    TraceSpec,
    catastrophe_flags,
    coupled_run,
    draw_block,
    draw_blocks,
    observe_catastrophe,
    run,
    select_parents,
    step,
    step_many,
    step_packed,
    vary,
)
from rankga.engine.exact import (
    check_invariant_measure_bound,
    exact_kernels,
    exact_transition_matrix,
    population_index,
    stationary_distribution,
)
from rankga.engine.genealogy import GenealogyState, genealogy_init, genealogy_step

__all__ = [
    "GAConfig", "RandomBlock", "TraceRecord", "TraceSpec", "catastrophe_flags", "coupled_run",
    "draw_block", "draw_blocks", "step_many", "observe_catastrophe", "run", "select_parents", "step", "step_packed", "vary",
    "check_invariant_measure_bound", "exact_kernels", "exact_transition_matrix",
    "population_index", "stationary_distribution",
    "GenealogyState", "genealogy_init", "genealogy_step",
]
