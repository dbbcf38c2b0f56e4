"""Principal nested spheres: nonlinear dimension reduction on the sphere.

Backward fitting of nested subspheres with per-level choice between great
and small fits, circular-plus-interval scores, a PCA-reduced fast path for
high-dimensional spheres, and back-fitted variable paths for biplots.
"""

from .biplot import BiplotPath, backfit_paths, emit_biplot, rank_variables
from .core import (
    MODES,
    NestedSphereModel,
    PnsFit,
    fit_pns,
    inverse_score_map,
    parameter_count,
    score_map,
    variance_explained,
)
from .fastpns import (
    FastPnsBasis,
    FastPnsFit,
    build_basis,
    fast_pns,
    lift_exact,
    lift_extrinsic,
    lift_tangent,
    project_reduced,
)
from .fitting import DegenerateDataError, SubsphereFit, fit_great, fit_small
from .geometry import (
    Subsphere,
    frechet_mean_circle,
    geodesic_dist,
    inverse_transform,
    project_to_subsphere,
    rotation_to_pole,
    sphere_transform,
)
from .io import Dataset, load_csv, model_from_dict, model_to_dict
from .selection import (
    LevelTestResult,
    bic_choice,
    chi2_cdf,
    f_cdf,
    f_quantile,
    kolmogorov_cdf,
    ks_two_sample,
    lr_test,
    variance_f_test,
)
from .simulate import calibrate_test, sample_great_null, simulate_nested

__version__ = "0.1.0"

__all__ = [
    "BiplotPath",
    "Dataset",
    "DegenerateDataError",
    "FastPnsBasis",
    "FastPnsFit",
    "LevelTestResult",
    "MODES",
    "NestedSphereModel",
    "PnsFit",
    "Subsphere",
    "SubsphereFit",
    "backfit_paths",
    "bic_choice",
    "build_basis",
    "calibrate_test",
    "chi2_cdf",
    "emit_biplot",
    "f_cdf",
    "f_quantile",
    "fast_pns",
    "fit_great",
    "fit_pns",
    "fit_small",
    "frechet_mean_circle",
    "geodesic_dist",
    "inverse_score_map",
    "inverse_transform",
    "kolmogorov_cdf",
    "ks_two_sample",
    "lift_exact",
    "lift_extrinsic",
    "lift_tangent",
    "load_csv",
    "lr_test",
    "model_from_dict",
    "model_to_dict",
    "parameter_count",
    "project_reduced",
    "project_to_subsphere",
    "rank_variables",
    "rotation_to_pole",
    "sample_great_null",
    "score_map",
    "simulate_nested",
    "sphere_transform",
    "variance_explained",
    "variance_f_test",
]
