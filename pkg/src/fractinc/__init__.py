"""fractinc: a numerical laboratory for fractal incidence geometry.

Discretized fractal sets and measures, separated line/plane families,
fast incidence counting at scale, projection and slicing transforms,
the point/plane duality, and reproducible experiments that verify the
governing scaling exponents empirically.
"""

from .constants import DUALITY_RADIUS, MOLLIFIER_MASS
from .deltasets import (
    FrostmanReport,
    SharpnessInstance,
    SharpnessParams,
    covering_number,
    gen_cantor_times_ball,
    gen_product_cantor,
    gen_sharpness_construction,
    lines_from_angles,
    validate_frostman_set,
)
from .duality import (
    DualityContext,
    dual_plane,
    dual_planes_batch,
    dual_point,
    dual_points_batch,
    dualize_furstenberg_config,
    verify_duality_relations,
)
from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    gen_random_frostman_set,
    gen_random_lines,
    run_experiment,
)
from .geometry import (
    AffinePlane,
    PlaneFamily,
    PointCloud,
    Resolution,
    dist_point_plane,
    dist_points_to_plane,
    grassmann_distance,
    orthocomplement,
    projection_op_distances,
    sample_grassmannian,
    verify_cloud_separation,
    verify_family_separation,
)
from .incidence import (
    HAVE_COMPILED,
    KERNEL_NAME,
    IncidenceTally,
    brute_force_pairs,
    count_incidences,
    incidence_bound_rhs,
    pigeonhole_two_stage,
    pigeonhole_uniform,
    set_num_threads,
)
from .measures import (
    GridField,
    GridMeasure,
    MollifierSpec,
    ball_integral_scaling,
    ball_mass_field,
    lp_norm,
    make_disc_measure,
    make_uniform_square,
    mattila_identity_check,
    measure_frostman_constant,
    mollify_point_cloud,
    project_measure,
    projection_lp_integral,
    radial_identity_check,
    restricted_projection_lp,
    riesz_energy,
    slice_profile,
)
from .slopes import SlopeFit, fit_loglog_slope

__version__ = "0.1.0"

__all__ = [
    "AffinePlane", "DualityContext", "DUALITY_RADIUS", "EXPERIMENTS",
    "ExperimentConfig", "FrostmanReport", "GridField", "GridMeasure",
    "HAVE_COMPILED", "IncidenceTally", "KERNEL_NAME", "MOLLIFIER_MASS",
    "MollifierSpec", "PlaneFamily", "PointCloud", "Resolution",
    "SharpnessInstance", "SharpnessParams", "SlopeFit",
    "ball_integral_scaling", "ball_mass_field", "brute_force_pairs",
    "count_incidences", "covering_number", "dist_point_plane",
    "dist_points_to_plane", "dual_plane", "dual_planes_batch", "dual_point",
    "dual_points_batch", "dualize_furstenberg_config", "fit_loglog_slope",
    "gen_cantor_times_ball", "gen_product_cantor", "gen_random_frostman_set",
    "gen_random_lines", "gen_sharpness_construction", "grassmann_distance",
    "incidence_bound_rhs", "lines_from_angles", "lp_norm",
    "make_disc_measure", "make_uniform_square", "mattila_identity_check",
    "measure_frostman_constant", "mollify_point_cloud", "orthocomplement",
    "pigeonhole_two_stage", "pigeonhole_uniform", "project_measure",
    "projection_lp_integral", "projection_op_distances", "radial_identity_check",
    "restricted_projection_lp", "riesz_energy", "run_experiment",
    "sample_grassmannian", "set_num_threads", "slice_profile",
    "validate_frostman_set", "verify_cloud_separation",
    "verify_duality_relations", "verify_family_separation",
]
