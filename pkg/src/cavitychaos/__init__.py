"""Semiquantum dynamics of a two-level atom in a quantized standing-wave
cavity: coupled translational, electronic and field evolution, plus the
chaos diagnostics built on top of it (Lyapunov exponents, inversion
sensitivity, exit-time fractals)."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    ControlParams,
    SemiclassicalState,
    FockPairState,
    LadderState,
    InitialPreparation,
    SemiclassicalModel,
    FockPairModel,
    LadderModel,
    RunningWaveBlochModel,
    amplitudes_to_bloch,
    prepare_initial,
    reduce_to_semiclassical,
    embed_fock_pair,
)
from .integrate import (  # noqa: F401
    IntegratorConfig,
    EventSpec,
    Trajectory,
    integrate,
    detect_exit,
    count_node_crossings,
)
from .lyapunov import (  # noqa: F401
    LyapunovResult,
    max_lyapunov,
    lyapunov_spectrum,
)
from .experiments import (  # noqa: F401
    CavityGeometry,
    AxisSpec,
    SweepGrid,
    ExitRecord,
    doppler_rabi_run,
    doppler_rabi_analytic,
    lambda_map,
    zout_zin_scan,
    exit_time_scan,
    classify_trajectory,
)
from .analysis import (  # noqa: F401
    BoxCountConfig,
    BoxCountResult,
    box_counting_dimension,
    stochastic_layer_width,
    predictability_horizon,
    transport_exponent,
    recurrence_exponent,
    recurrence_fit,
)
