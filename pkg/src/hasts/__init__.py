"""Hierarchical analysis-suitable T-splines with Bezier extraction and an
adaptive SUPG solver for steady advection-diffusion."""

__version__ = "0.1.0"
