"""Blow-up analysis of a fast-slow reaction-diffusion system through spectral Galerkin truncations."""
from . import charts, errors, manifolds, model, spectral
from .charts import ChartPoint
from .model import GalerkinState, ModelParams

__version__ = "0.1.0"
