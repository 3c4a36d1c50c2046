"""Comparison figures for sequential-design experiment results.

Consumes the ``strategy,stage,metric,value,stderr`` CSV written by the
``seqdesign`` harness and renders one figure per metric: a line per strategy
over the experiment stages, with shaded bands of one standard error.
"""

__version__ = "0.1.0"

from .series import MetricSeries, load_results
from .render import render_comparison

__all__ = ["MetricSeries", "load_results", "render_comparison"]
