"""Exact and numerical checks of discrete restriction phenomena.

Point sets on the paraboloid and sphere, exponential-sum L^p averages,
additive energies, and the incidence geometry used to bound them.
"""

from .energy import (
    EnergyReport,
    additive_quadruples,
    energy_bruteforce,
    energy_hashed,
    energy_sweep,
)
from .exceptions import (
    AliasingError,
    ConfigError,
    DiscrestError,
    GuardError,
    ParameterError,
    UnsupportedSurfaceError,
)
from .expsum import (
    ExponentFit,
    LpEstimate,
    eval_sum,
    fit_exponent,
    lp_average_ball,
    lp_norm_torus_grid,
    strichartz_norm,
)
from .incidence import (
    Circle,
    IncidenceReport,
    Line2D,
    circle_of_pair_sum,
    count_right_angles,
    e3_circle_incidences,
    e3_circle_map,
    equilateral_check,
    max_angle_repetition,
    point_line_incidences,
    verify_quadruple_geometry,
    verify_quadruples,
    wolff_relation,
)
from .pointsets import (
    Cap,
    PointSet,
    cap_partition,
    check_separation,
    gen_lattice_paraboloid,
    gen_lattice_subset,
    gen_separated_sample,
    gen_sphere_rational,
    min_energy_gap,
    read_pointset,
    write_pointset,
)

__version__ = "0.1.0"
