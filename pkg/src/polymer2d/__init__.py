"""Exact and Monte Carlo engine for the 2D directed polymer at intermediate disorder."""

__version__ = "0.1.0"

from .disorder import (
    GAUSSIAN,
    RADEMACHER,
    EnvironmentSpec,
    ScaledCoupling,
    cumulant,
    eta,
    make_coupling,
    omega,
    sigma,
    site_weight,
    zero_coupling,
)
from .partition import (
    BoxMask,
    PartitionValue,
    ScaledValue,
    WeightField,
    chaos_second_moments,
    chaos_sum,
    field_product_mass,
    forward_field,
    mesoscopic_mask,
    plane_to_point,
    point_to_plane,
    point_to_point,
    restricted_partition,
    two_replica_second_moment,
)
from .walk import (
    BoxSpec,
    heat_kernel,
    kernel_ratio_sup,
    mesoscopic_exponent,
    nq_sup,
    reachable,
    replica_overlap,
    srw_log_prob,
    srw_prob,
)

__all__ = [name for name in dir() if not name.startswith("_")]
