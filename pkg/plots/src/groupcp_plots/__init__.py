"""groupcp-plots: figure rendering for groupcp experiment CSV files."""

from .render import (
    CsvFormatError,
    ExperimentData,
    FigureSpec,
    read_experiment_csv,
    render,
)

__version__ = "0.1.0"
