"""EEG emotion-recognition pipeline: filtering, windowing, electrode
ordering, CNN training, and cross-validated evaluation, all driven by the
C++ core."""

from ._core import (
    ConfigError,
    PipelineError,
    ValidationError,
    accuracy,
    bandpass_gain_db,
    bandpass_series,
    electrode_names,
    full_convolve,
    generate_dataset,
    majority_label,
    mcc,
    optimal_path,
    order_by_adjacent_pcc,
    pcc,
    report_tables,
    run_experiments,
    window_count,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "PipelineError",
    "ValidationError",
    "accuracy",
    "bandpass_gain_db",
    "bandpass_series",
    "electrode_names",
    "full_convolve",
    "generate_dataset",
    "majority_label",
    "mcc",
    "optimal_path",
    "order_by_adjacent_pcc",
    "pcc",
    "report_tables",
    "run_experiments",
    "window_count",
]
