"""Field-amplification surrogates for 2D Helmholtz transmission scattering."""

from .amplification import (
    AmplificationCurve,
    WavenumberGrid,
    direct_sweep,
    field_amplification,
    spectral_norm_rpm,
)
from .bem import (
    BemSystem,
    OperatorMatrix,
    SolutionOperator,
    apply_solution_operator,
    assemble_calderon,
    assemble_mass,
    assemble_system_matrix,
    build_system,
    solution_operator,
    sqrt_mass,
)
from .disk_spectrum import (
    BeynConfig,
    SpectrumEstimate,
    beyn_solve,
    dispersion,
    exact_disk_spectrum,
)
from .geometry import BoundaryMesh, build_mesh, make_curve
from .hybrid import (
    CollocationSet,
    HybridSurrogate,
    collocation_points,
    dedupe_and_nudge,
    eval_hybrid,
    filter_poles_close,
    fit_max,
    fit_sum,
    hybrid_sweep,
)
from .kernels import KernelValue, bessel_j, bessel_y, green_2d, hankel1, hankel1_derivative
from .rational import (
    GramTable,
    PoleSet,
    RationalSurrogate,
    barycentric_eval,
    build_gram,
    fit_weights,
    gram_amplification,
    greedy_sample,
    matrix_surrogate_sweep,
    poles,
    sketch_samples,
    sketched_surrogate_sweep,
)

__version__ = "0.1.0"
