"""Training, evaluation, guidance, metrics and export services."""
