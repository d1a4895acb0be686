"""Rendering for fa-lab experiment artifacts.

Consumes only the on-disk interfaces the experiment harness emits (metrics
CSV files and the plot-manifest JSON); holds no numerical logic of its own.
"""

from .render import CompareReport, RenderResult, SchemaMismatch, compare, render

__all__ = ["CompareReport", "RenderResult", "SchemaMismatch", "compare", "render"]
