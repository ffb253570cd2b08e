from .presets import PRESETS, Preset, PresetPayload, get_preset
from .scenario import Scenario, ScenarioFile, load_scenario, parse_scenario, preset_scenario
from .render import BLACK, GREEN, RED, WHITE, Layer, RenderSpec, render, save_ppm
from .runner import PipelineRun, RunResult, locate_attractor, run_scenario, task_closure
from .verify import CheckOutcome, all_passed, verify_run

__all__ = [
    "PRESETS", "Preset", "PresetPayload", "get_preset",
    "Scenario", "ScenarioFile", "load_scenario", "parse_scenario", "preset_scenario",
    "BLACK", "GREEN", "RED", "WHITE", "Layer", "RenderSpec", "render", "save_ppm",
    "PipelineRun", "RunResult", "locate_attractor", "run_scenario", "task_closure",
    "CheckOutcome", "all_passed", "verify_run",
]
