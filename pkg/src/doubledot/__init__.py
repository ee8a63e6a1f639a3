"""Open double quantum dot: effective Hamiltonian, exceptional points and transmission."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (
    Channel,
    ClosedSpectrum,
    DoubleDotSpec,
    EffectiveHamiltonian,
    build_closed_hamiltonian,
    build_effective_hamiltonian,
    channel_from_energy,
    closed_spectrum,
    coupling_vectors,
    site_effective_hamiltonian,
)
from .spectral import (
    AnalyticThreeState,
    EigenSet,
    ResonanceState,
    Trajectories,
    analytic_three_state,
    eigen_sweep,
    eigendecompose,
    phase_rigidity,
    resonance_states,
    solve_fixed_points,
    track_trajectories,
)
from .transmission import (
    ScatteringMatrix,
    TransmissionPoint,
    TransmissionZeros,
    predict_transmission_zeros,
    scattering_matrix,
    transmission,
    transmission_curve,
    transmission_resolvent,
    transmission_spectral,
)
from .branchpoints import (
    BranchPoint,
    DiscriminantF,
    critical_coupling,
    critical_lengths,
    critical_u_double_coincidence,
    discriminant,
    find_ep_numeric,
)
from .sweep import Axis, SweepConfig, SweepResult, export, run_sweep
from .presets import FIGURES, preset_spec, reproduce_figure
