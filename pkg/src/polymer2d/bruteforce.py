"""Exhaustive path-enumeration oracles for small systems.

Everything here sums over all 4^N nearest-neighbour paths directly, with no
transfer matrix, no log-scaling, and no truncation, so it can cross-check
the production engine on the same disorder realization.  Intended for
N <= ~8 (4^8 = 65536 paths).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .disorder import EnvironmentSpec, ScaledCoupling, omega

_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def all_paths(n: int) -> np.ndarray:
    """Array (4^n, n+1, 2) of every nearest-neighbour path from the origin."""
    paths = np.zeros((4**n, n + 1, 2), dtype=np.int64)
    for idx, choice in enumerate(itertools.product(range(4), repeat=n)):
        x1, x2 = 0, 0
        for t, c in enumerate(choice, start=1):
            dx = _STEPS[c]
            x1 += dx[0]
            x2 += dx[1]
            paths[idx, t, 0] = x1
            paths[idx, t, 1] = x2
    return paths


def path_weights(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    paths: np.ndarray,
    *,
    t_lo: int = 1,
    t_hi: int | None = None,
    mask=None,
) -> np.ndarray:
    """exp(sum_{n=t_lo..t_hi} (beta omega_{n,S_n} - lambda)) for every path."""
    n = paths.shape[1] - 1
    t_hi = n if t_hi is None else t_hi
    acc = np.zeros(paths.shape[0])
    for t in range(t_lo, t_hi + 1):
        for idx in range(paths.shape[0]):
            z = (int(paths[idx, t, 0]), int(paths[idx, t, 1]))
            if mask is not None and not mask.contains(t, z):
                continue
            acc[idx] += coupling.beta_n * omega(env, t, z) - coupling.lambda1
    return np.exp(acc)


def point_to_plane_bf(env, coupling, n, mask=None) -> float:
    paths = all_paths(n)
    w = path_weights(env, coupling, paths, mask=mask)
    return float(np.mean(w))


def point_to_point_bf(env, coupling, n, z, endpoint_disorder, mask=None) -> float:
    """Conditional expectation over paths pinned at (n, z)."""
    paths = all_paths(n)
    hit = (paths[:, n, 0] == z[0]) & (paths[:, n, 1] == z[1])
    if not np.any(hit):
        raise ValueError("endpoint unreachable")
    t_hi = n if endpoint_disorder else n - 1
    w = path_weights(env, coupling, paths[hit], t_hi=t_hi, mask=mask)
    return float(np.mean(w))


def plane_to_point_bf(env, coupling, start_time, n, z, mask=None) -> float:
    """Backward polymer value: reversed free walk from (n, z), weights at
    times start_time .. n-1."""
    k = n - start_time
    paths = all_paths(k)  # reversed trajectories from z
    acc = np.zeros(paths.shape[0])
    for step in range(1, k + 1):
        t = n - step
        for idx in range(paths.shape[0]):
            zz = (int(z[0] + paths[idx, step, 0]), int(z[1] + paths[idx, step, 1]))
            if mask is not None and not mask.contains(t, zz):
                continue
            acc[idx] += coupling.beta_n * omega(env, t, zz) - coupling.lambda1
    return float(np.mean(np.exp(acc)))


def quenched_probabilities(env, coupling, n) -> dict[tuple, float]:
    """Exact quenched path measure: probability of every length-n path."""
    paths = all_paths(n)
    w = path_weights(env, coupling, paths)
    w = w / w.sum()
    return {tuple(map(tuple, paths[i])): float(w[i]) for i in range(paths.shape[0])}


def quenched_marginal_bf(env, coupling, n, constraints) -> float:
    """P^omega(S_{m_k} in target_k for all k); targets are points or balls.

    constraints: list of (m, ("point", z)) or (m, ("ball", x, r)) with the
    ball meaning |z/sqrt(ambient) - x| < r in Euclidean norm, ambient = coupling.n.
    """
    paths = all_paths(n)
    w = path_weights(env, coupling, paths)
    keep = np.ones(paths.shape[0], dtype=bool)
    root_n = math.sqrt(coupling.n)
    for m, target in constraints:
        if target[0] == "point":
            z = target[1]
            keep &= (paths[:, m, 0] == z[0]) & (paths[:, m, 1] == z[1])
        else:
            x, r = target[1], target[2]
            dx = paths[:, m, 0] / root_n - x[0]
            dy = paths[:, m, 1] / root_n - x[1]
            keep &= dx * dx + dy * dy < r * r
    return float(w[keep].sum() / w.sum())


def second_moment_bf(coupling, n, separation=(0, 0)) -> float:
    """E[Z(0,0,n,*) Z(0,u,n,*)] by enumerating pairs of paths.

    The first walk starts at the origin, the second at u; every coincidence
    S_m = S'_m contributes a factor (1 + sigma^2).
    """
    paths = all_paths(n)
    shifted = paths + np.array(separation, dtype=np.int64)
    total = 0.0
    sig2 = coupling.sigma_sq
    m = paths.shape[0]
    for i in range(m):
        eq = np.all(paths[None, i, 1:, :] == shifted[:, 1:, :], axis=2)
        total += float(np.sum(np.prod(1.0 + sig2 * eq, axis=1)))
    return total / m / m
