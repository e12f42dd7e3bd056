"""Nonresonant one-photon mazer: scattering of cold two-level atoms by a detuned cavity."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ChannelWavenumbers,
    DressedFrame,
    MazerParams,
    Regime,
    StepEnergies,
    channel_wavenumbers,
    classify_regime,
    critical_detuning,
    critical_k_ratio,
    dressed_frame,
    step_energies,
)
from .errors import IllConditioned, MazerError, NoConvergence, SingularKernel  # noqa: E402
from .mesa import (  # noqa: E402
    ChannelProbabilities,
    ScatteringAmplitudes,
    emission_probability,
    mesa_amplitudes,
    probabilities,
    resonant_amplitudes,
)
from .regimes import (  # noqa: E402
    PeakReport,
    cold_detuning_bounds,
    cold_emission_approx,
    cold_emission_fit,
    peak_report,
    rabi_emission,
)
from .solver import (  # noqa: E402
    ModeProfile,
    ProfileKind,
    SliceTransfer,
    converge,
    slice_transfer,
    solve_scattering,
    stationary_coupling_matrix,
)
