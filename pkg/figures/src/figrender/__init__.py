"""Plotting side of the SIMO ad hoc study: turns the experiment runner's CSV
artifacts into figures.  Pure rendering; no quantity is recomputed here."""

from .render import FIGURES, PlotSpec, render

__all__ = ["FIGURES", "PlotSpec", "render"]
