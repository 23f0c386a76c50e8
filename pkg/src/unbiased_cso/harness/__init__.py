from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config, parse_config
from .outputs import OutputDirError, Plot, Table, emit_outputs, read_csv, write_csv
from .report import MseReport, MseRow, decompose_mse, loglog_slope
from .runner import ExperimentFailed, run_experiment
