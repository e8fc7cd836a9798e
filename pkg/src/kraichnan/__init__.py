"""Transport-noise vorticity models: noise spectra, samplers, spectral solvers,
the mean-energy master equation, Girsanov reweighting and self-similar
forcing scaffolding."""

from .errors import (
    BlowUp,
    ComparisonFailure,
    ConfigError,
    DomainError,
    EnsembleBlowUp,
    KraichnanError,
    NegativeSpectrum,
    NumericalError,
    PreconditionError,
    SingularPairing,
    StabilityError,
)
from .grid import Grid
from .operators import ScalarField, VectorField
from .spectra import NoiseModel, build_noise_model, make_density

__version__ = "0.1.0"
