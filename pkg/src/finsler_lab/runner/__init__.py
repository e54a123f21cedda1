"""Configuration, sampling, suite orchestration and report output."""

from .config import RunConfig, config_from_dict, parse_config
from .report import emit_report
from .sampling import draw_samples
from .suites import FLAGS, exit_code, run_suites
