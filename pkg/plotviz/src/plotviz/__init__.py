"""Truth-vs-estimate figure rendering for gssm-lab estimate CSVs."""

from .render import CSV_HEADER, PlotSpec, SchemaError, SeriesData, load_aligned, load_series, render

__version__ = "0.1.0"
