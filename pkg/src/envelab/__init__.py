"""Toeplitz spectra, psh envelopes and geodesic speeds on the Riemann sphere."""

from .bigtoeplitz import (
    EscalationExhausted,
    HermitianToeplitzMatrix,
    LogSpectrum,
    PiecewiseSymbol,
    PrecisionError,
    fit_decay_exponent,
    fit_decay_exponent_logs,
    inertia,
    log_spectrum,
    smallest_eigenvalue,
)
from .energy import d1_distance, dp_distance_radial, energy_diff
from .extremal import c_exponent, chebyshev_value, envelope_field
from .geometry import ArcSet, Chart, ChartPoint, RadialSet, WeightPotential
from .measures import DiscreteMeasure, PushforwardMeasure, kolmogorov_distance
from .norms import MeasureSpec, gram, relative_spectrum, schatten_distance, transfer_spectrum, volume_ratio
from .radial import (
    RadialProfile,
    RadialSymbol,
    diagonal_toeplitz_spectrum,
    geodesic,
    geodesic_speed,
    legendre,
    inverse_legendre,
    radial_envelope,
    speed_pushforward,
)

__version__ = "0.1.0"
