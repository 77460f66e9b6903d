"""Photon information efficiency limits of background-limited photon counting."""

__version__ = "0.1.0"

from .errors import (
    CertificationError,
    DomainError,
    InfeasibleError,
    InfiniteDivergenceError,
    PieError,
)
from .kernel import binary_relative_entropy, lambert_w0, lambert_w0_asymptotic
from .link import (
    LinkAnalysis,
    LinkGeometry,
    channel_transmission,
    design_variable_bandwidth,
    detected_signal_photons,
    information_rate,
    optimal_symbol_duration,
)
from .model import (
    ModulationFormat,
    OperatingPoint,
    coherent_detection_limit,
    noiseless_pie,
    photocount_probabilities,
    pie_approx_lambert,
    pie_bound,
    pie_bound_ns,
    pie_bound_vanishing_signal,
)
from .optimize import (
    PieResult,
    SweepGrid,
    optimize_format_order,
    optimize_vanishing_signal,
    sweep,
)
from .oracle import ChannelSpec, certify_bound, exact_mutual_information
