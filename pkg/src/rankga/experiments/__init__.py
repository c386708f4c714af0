from rankga.experiments.config import build_ga_config, load_calibration, load_config, sweep_points
from rankga.experiments.runner import RunResult, TrialResult, run_scenario, summary_from_csv
from rankga.experiments.scenarios import SCENARIOS, get_scenario

__all__ = ["build_ga_config", "load_calibration", "load_config", "sweep_points", "RunResult",
           "TrialResult", "run_scenario", "summary_from_csv", "SCENARIOS", "get_scenario"]
