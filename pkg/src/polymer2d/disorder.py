"""Disorder laws, cumulants, intermediate-disorder coupling, and the field.

The environment omega is a mean-zero unit-variance i.i.d. field over
(n, z) in N x Z^2, realized statelessly: each variate is a pure function of
(master_seed, replica, n, z), so partition functions, restricted variants,
and sampled paths all see the same realization with O(1) memory, from any
number of concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .walk import replica_overlap

GAUSSIAN = "gaussian"
RADEMACHER = "rademacher"
LAWS = (GAUSSIAN, RADEMACHER)

_LAW_IDS = {GAUSSIAN: 0, RADEMACHER: 1}


def law_id(law: str) -> int:
    try:
        return _LAW_IDS[law]
    except KeyError:
        raise ValueError(f"unknown disorder law {law!r}; expected one of {LAWS}") from None


def cumulant(law: str, beta: float) -> float:
    """lambda(beta) = log E[exp(beta * omega)], in closed form.

    gaussian: beta^2 / 2.  rademacher: log cosh beta.
    """
    law_id(law)
    if law == GAUSSIAN:
        return 0.5 * beta * beta
    # log cosh without overflow for large |beta|
    b = abs(beta)
    return b + math.log1p(math.exp(-2.0 * b)) - math.log(2.0)


def sigma(law: str, beta: float) -> float:
    """sigma(beta) = sqrt(exp(lambda(2 beta) - 2 lambda(beta)) - 1) >= 0."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    gap = cumulant(law, 2.0 * beta) - 2.0 * cumulant(law, beta)
    return math.sqrt(math.expm1(gap))


@dataclass(frozen=True)
class ScaledCoupling:
    """Coupling constants for one system size under beta_N = beta_hat / sqrt(R_N)."""

    law: str
    beta_hat: float
    n: int
    overlap: float  # R_N
    beta_n: float
    lambda1: float  # lambda(beta_N)
    lambda2: float  # lambda(2 beta_N)
    sigma_n: float

    @property
    def sigma_sq(self) -> float:
        return self.sigma_n * self.sigma_n


def make_coupling(law: str, beta_hat: float, n: int) -> ScaledCoupling:
    if not 0.0 < beta_hat < 1.0:
        raise ValueError("beta_hat must lie in the subcritical window (0, 1)")
    if n < 1:
        raise ValueError("need N >= 1")
    law_id(law)
    r, _ = replica_overlap(n)
    beta_n = beta_hat / math.sqrt(r)
    return ScaledCoupling(
        law=law,
        beta_hat=beta_hat,
        n=n,
        overlap=r,
        beta_n=beta_n,
        lambda1=cumulant(law, beta_n),
        lambda2=cumulant(law, 2.0 * beta_n),
        sigma_n=sigma(law, beta_n),
    )


def zero_coupling(law: str, n: int) -> ScaledCoupling:
    """Disorder-free coupling (beta_N = 0); all partition functions collapse to 1."""
    r, _ = replica_overlap(n)
    return ScaledCoupling(law, 0.0, n, r, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class EnvironmentSpec:
    """One realization of the disorder field, addressed by coordinates."""

    law: str
    master_seed: int
    replica: int = 0

    def __post_init__(self) -> None:
        law_id(self.law)
        if self.replica < 0:
            raise ValueError("replica index must be non-negative")

    @property
    def key(self) -> np.uint64:
        # keep uint64 across the Python/numba boundary: a plain int would be
        # retyped as int64 and break the hash's logical shifts
        return np.uint64(_rng.field_key(np.int64(self.master_seed), np.int64(self.replica)))

    @property
    def lid(self) -> int:
        return law_id(self.law)

    def with_replica(self, replica: int) -> "EnvironmentSpec":
        return EnvironmentSpec(self.law, self.master_seed, replica)


def omega(env: EnvironmentSpec, n: int, z: tuple[int, int]) -> float:
    """The disorder variate omega_{n,z}; pure in (seed, replica, n, z).

    The field is indexed by n >= 0: forward partition functions only read
    n >= 1, but backward ones started at time 0 collect the slice at 0.
    """
    if n < 0:
        raise ValueError("the field lives on times n >= 0")
    return float(_rng.omega_site(env.key, env.lid, np.int64(n), np.int64(z[0]), np.int64(z[1])))


def omega_array(env: EnvironmentSpec, n: int, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Vectorized omega over arrays of lattice coordinates at one time slice."""
    if n < 0:
        raise ValueError("the field lives on times n >= 0")
    x1 = np.ascontiguousarray(x1, dtype=np.int64).ravel()
    x2 = np.ascontiguousarray(x2, dtype=np.int64).ravel()
    out = np.empty(x1.size)
    _rng.omega_fill(env.key, env.lid, np.int64(n), x1, x2, out)
    return out


def site_weight(env: EnvironmentSpec, coupling: ScaledCoupling, n: int, z: tuple[int, int]) -> float:
    """Boltzmann weight exp(beta_N * omega_{n,z} - lambda(beta_N))."""
    if coupling.beta_n == 0.0:
        return 1.0
    return math.exp(coupling.beta_n * omega(env, n, z) - coupling.lambda1)


def eta(env: EnvironmentSpec, coupling: ScaledCoupling, n: int, z: tuple[int, int]) -> float:
    """Normalized chaos variable (exp(beta_N omega - lambda) - 1) / sigma_N."""
    return (site_weight(env, coupling, n, z) - 1.0) / coupling.sigma_n
