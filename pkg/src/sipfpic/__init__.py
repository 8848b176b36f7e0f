"""Keller-Segel chemotaxis simulation with stochastic particles and a spectral field,
coupled through particle-in-cell deposition and gathering."""

from .config import ConfigError, SimParams, validate
from .engine import pic_step, run_pic
from .oracle import run_sipf_direct
from .particles import BlowupError, ParticleEnsemble
from .spectral import SpectralField

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "ConfigError",
    "ParticleEnsemble",
    "SimParams",
    "SpectralField",
    "pic_step",
    "run_pic",
    "run_sipf_direct",
    "validate",
]
