"""Finite-time identification of relativistic one-particle states."""

from __future__ import annotations

from .distinguish import (
    AccessRegion,
    DecayFit,
    DistinguishReport,
    confusion_matrix,
    decay_fit,
    error_curve,
    gram_curve,
    truncated_gram,
)
from .kernels import (
    IntervalPoint,
    KernelValue,
    dplus_parts,
    equal_time_kernel,
    pauli_jordan_value,
    tail_asymptotic_ratio,
)
from .lightcone import (
    CoverageResult,
    FourVector,
    SpatialSupport,
    coverage_time,
    frame_elapsed_time_check,
    lorentz_boost,
    min_enclosing_ball,
)
from .position import (
    GalileanCompactState,
    PositionAmplitude,
    TailReport,
    epsilon_support_radius,
    kernel_form_overlap,
    paley_wiener_probe,
    position_amplitude,
    tail_mass,
)
from .profiles import ExpEnergy, Gaussian, PowerLaw, Tabulated
from .protocol import ProtocolStats, protocol_noise_sim, simulate_protocol
from .states import (
    FieldKind,
    GramMatrix,
    MomentumAmplitude,
    boost_amplitude,
    gram_matrix,
    inner_product,
    make_orthogonal_pair,
    normalize,
    outcome_matrix,
    outcome_probabilities,
)

__version__ = "0.1.0"
