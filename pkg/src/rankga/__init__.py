"""Simple genetic algorithm with ranking selection: simulation, exact kernels,
auxiliary lower-bound chain and the quasispecies threshold theory."""

from rankga.core import Chromosome, FitnessLandscape, Population
from rankga.selection import SelectionScheme
from rankga.engine import GAConfig, RandomBlock

__all__ = [
    "Chromosome",
    "FitnessLandscape",
    "Population",
    "SelectionScheme",
    "GAConfig",
    "RandomBlock",
]

__version__ = "0.1.0"
