from .experiment import (CSV_COLUMNS, EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, ConfigError, DecoderConfig,
                         ExperimentConfig, ExperimentReport, PairedComparison, binomial_half_width,
                         bit_matrix, decode_errors, export_bit_distribution, flip_profile,
                         monte_carlo, paired_comparison, paired_errors, run_bler_sweep,
                         run_estimator_comparison)

__all__ = [
    "CSV_COLUMNS", "EXIT_CONFIG", "EXIT_OK", "EXIT_PARTIAL", "ConfigError", "DecoderConfig",
    "ExperimentConfig", "ExperimentReport", "PairedComparison", "binomial_half_width",
    "bit_matrix", "decode_errors", "export_bit_distribution", "flip_profile", "monte_carlo",
    "paired_comparison", "paired_errors", "run_bler_sweep", "run_estimator_comparison",
]
