"""Numerical witnesses for causal homotopy classes on R x S^2 with conformal spatial metrics."""

__version__ = "0.1.0"
