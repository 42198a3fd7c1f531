"""Quenched polymer paths: exact sampling, diffusive rescaling, marginals.

Sampling works backwards-weights-first: with B_n(z) the partition mass of
the remaining future from (n, z) to the free endpoint, the quenched measure
is the Markov chain

    P(S_{n+1} = z' | S_n = z) = (1/4) w(n+1, z') B_{n+1}(z') / B_n(z),

so a path costs one uniform per step once the B fields are available.  B is
checkpointed every `stride` slices and the gaps are recomputed block by
block, trading a factor ~sqrt(N) of memory for one extra backward sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, _rng
from .disorder import EnvironmentSpec, ScaledCoupling
from .partition import (
    PartitionValue,
    WeightField,
    backward_field_slices,
    field_product_mass,
    forward_field,
    point_to_plane,
    point_to_point,
    truncation_extent,
)
from .walk import srw_prob

_EMPTY_BOXES = np.zeros((0, 5), dtype=np.int64)


@dataclass(frozen=True)
class PolymerPath:
    """A nearest-neighbour trajectory from the origin, positions[t] = (x1, x2)."""

    positions: np.ndarray  # (N+1, 2) int64

    def __post_init__(self):
        p = self.positions
        if p[0, 0] != 0 or p[0, 1] != 0:
            raise ValueError("paths start at the origin")
        steps = np.abs(np.diff(p, axis=0)).sum(axis=1)
        if not np.all(steps == 1):
            raise ValueError("consecutive points must be nearest neighbours")

    @property
    def length(self) -> int:
        return self.positions.shape[0] - 1

    def to_csv_rows(self):
        return [(n, int(x1), int(x2)) for n, (x1, x2) in enumerate(self.positions)]


@dataclass(frozen=True)
class RescaledPath:
    """pi_N image of a path: piecewise-linear [0,1] -> R^2 with S_j/sqrt(N) knots."""

    knots: np.ndarray  # (N+1, 2) float64

    @property
    def n(self) -> int:
        return self.knots.shape[0] - 1

    def at(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= 1.0:
            raise ValueError("t must lie in [0, 1]")
        s = t * self.n
        j = min(int(math.floor(s)), self.n - 1)
        frac = s - j
        return self.knots[j] + frac * (self.knots[j + 1] - self.knots[j])


def rescale(path: PolymerPath) -> RescaledPath:
    n = path.length
    return RescaledPath(path.positions.astype(np.float64) / math.sqrt(n))


def modulus(path: RescaledPath, delta: float) -> float:
    """Exact modulus of continuity sup_{|t-s|<=delta} |phi_t - phi_s|.

    For a piecewise-linear path the square of the displacement is convex on
    each (segment, segment) cell, so the supremum is attained at a knot pair
    or at a pair (t, t +- delta) with one end at a knot; both families are
    scanned exactly.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    v = path.knots
    n = path.n
    d_max = min(n, int(math.floor(delta * n)))
    best = 0.0
    for d in range(1, d_max + 1):
        diff = v[d:] - v[:-d]
        best = max(best, float(np.max(np.einsum("ij,ij->i", diff, diff))))
    h = delta * n - d_max
    if h > 1e-12 and d_max < n:
        lead = v[d_max:-1] + h * (v[d_max + 1 :] - v[d_max:-1])
        diff = lead - v[: n - d_max]
        best = max(best, float(np.max(np.einsum("ij,ij->i", diff, diff))))
        trail = v[1 : n - d_max + 1] - h * (v[1 : n - d_max + 1] - v[: n - d_max])
        diff = v[d_max + 1 :] - trail
        best = max(best, float(np.max(np.einsum("ij,ij->i", diff, diff))))
    return math.sqrt(best)


@dataclass
class BackwardWeights:
    """Checkpointed backward partition weights for one disorder realization."""

    env: EnvironmentSpec
    coupling: ScaledCoupling
    n: int
    stride: int
    truncation: float | None
    checkpoints: dict[int, WeightField]

    @property
    def partition_value(self) -> PartitionValue:
        b0 = self.checkpoints[0]
        v = b0.value_at((0, 0))
        return PartitionValue(v.mantissa, v.exp2)


def backward_weights(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    n: int,
    checkpoint_stride: int | None = None,
    *,
    truncation: float | None = None,
) -> BackwardWeights:
    """Build the checkpointed fields B_n down to time 0 (B_N = 1, free end)."""
    stride = checkpoint_stride or max(1, math.isqrt(n - 1) + 1)  # ceil(sqrt(N))
    if not 1 <= stride <= n:
        raise ValueError("stride must lie in [1, N]")
    times = sorted(set(range(0, n + 1, stride)) | {0, n})
    fields = backward_field_slices(env, coupling, n, times, truncation=truncation)
    return BackwardWeights(
        env=env,
        coupling=coupling,
        n=n,
        stride=stride,
        truncation=truncation,
        checkpoints={f.time: f for f in fields},
    )


def _recompute_block(
    weights: BackwardWeights, n_lo: int, n_hi: int, g: np.ndarray | None = None
) -> np.ndarray:
    """G slices w_n * B_n for n in (n_lo, n_hi], padded, from the checkpoint at n_hi.

    `g` is an optional preallocated buffer of shape at least
    (n_hi - n_lo, wmax + 3, wmax + 3); reusing one across blocks avoids
    re-zeroing hundreds of MB per sampled replica.
    """
    env, c = weights.env, weights.coupling
    T = min(truncation_extent(c.n, weights.truncation), weights.n + 4)
    ck = weights.checkpoints[n_hi]
    wmax = min(n_hi, T + 2) + 1
    init = np.zeros((wmax + 3, wmax + 3))
    v = ck.values
    init[1 : v.shape[0] + 1, 1 : v.shape[1] + 1] = v
    if g is None or g.shape[0] < n_hi - n_lo or g.shape[1] < wmax + 3:
        g = np.zeros((n_hi - n_lo, wmax + 3, wmax + 3))
    dummy_slices = np.zeros((1, 1, 1))
    dummy_e2 = np.zeros(1, dtype=np.int64)
    _kernels.evolve_backward(
        env.key,
        np.int64(env.lid),
        c.beta_n,
        c.lambda1,
        np.int64(n_hi),
        np.int64(n_lo),
        np.int64(T),
        init,
        np.int64(ck.exp2),
        np.zeros(0, dtype=np.int64),
        dummy_slices,
        dummy_e2,
        True,
        g,
        _EMPTY_BOXES,
        False,
    )
    return g


def sample_paths(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    weights: BackwardWeights,
    sampler_seeds: list[int],
) -> list[PolymerPath]:
    """Draw exact quenched paths, one per sampler seed, sharing block recomputes.

    Neighbour order for cumulative inversion is fixed (+x, -x, +y, -y) and
    each path consumes one uniform per step, keyed by (master_seed, replica,
    sampler_seed, step), so results are reproducible for any stride and any
    batch composition.
    """
    n = weights.n
    T = min(truncation_extent(coupling.n, weights.truncation), n + 4)
    npaths = len(sampler_seeds)
    pos_i = np.zeros(npaths, dtype=np.int64)
    pos_j = np.zeros(npaths, dtype=np.int64)
    out_i = np.zeros((npaths, n + 1), dtype=np.int64)
    out_j = np.zeros((npaths, n + 1), dtype=np.int64)
    keys = np.array(
        [
            _rng.sampler_key(
                np.int64(env.master_seed), np.int64(env.replica), np.int64(s)
            )
            for s in sampler_seeds
        ],
        dtype=np.uint64,
    )
    blocks = sorted(weights.checkpoints.keys())
    for lo, hi in zip(blocks, blocks[1:]):
        g = _recompute_block(weights, lo, hi)
        _kernels.advance_paths(
            g, np.int64(lo), np.int64(hi), np.int64(T), pos_i, pos_j, keys, out_i, out_j
        )
    paths = []
    times = np.arange(n + 1)
    for p in range(npaths):
        x1 = out_i[p] + out_j[p] - times
        x2 = out_i[p] - out_j[p]
        paths.append(PolymerPath(np.stack([x1, x2], axis=1)))
    return paths


def sample_path(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    weights: BackwardWeights,
    sampler_seed: int,
) -> PolymerPath:
    return sample_paths(env, coupling, weights, [sampler_seed])[0]


Target = tuple  # ("point", z) | ("ball", x, r)


def _apply_target(field: WeightField, target: Target, ambient_n: int) -> WeightField:
    if target[0] == "point":
        z = target[1]
        v = field.value_at(z)
        if v.mantissa <= 0.0:
            return WeightField(field.time, 0, 0, np.zeros((1, 1)), 0)
        i = (field.time + z[0] + z[1]) // 2
        j = (field.time + z[0] - z[1]) // 2
        return WeightField(field.time, i, j, np.array([[v.mantissa]]), field.exp2)
    if target[0] == "ball":
        x, r = target[1], target[2]
        x1, x2 = field.site_coords()
        root = math.sqrt(ambient_n)
        d1 = x1 / root - x[0]
        d2 = x2 / root - x[1]
        keep = d1 * d1 + d2 * d2 < r * r
        vals = np.where(keep, field.values, 0.0)
        return WeightField(field.time, field.offset_i, field.offset_j, vals, field.exp2)
    raise ValueError(f"unknown target kind {target[0]!r}")


def quenched_marginal(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    n: int,
    constraints: list[tuple[int, Target]],
    *,
    truncation: float | None = None,
) -> float:
    """Exact P^omega(S_{m_1} in A_1, ..., S_{m_K} in A_K) without sampling.

    Forward fields are spliced through the constraint slices and closed with
    the backward weights after the last constraint; the normalizer is the
    full partition value read off the same backward pass at time 0.
    """
    if not constraints:
        raise ValueError("need at least one constraint")
    constraints = sorted(constraints)
    times = [m for m, _ in constraints]
    if len(set(times)) != len(times) or times[0] < 1 or times[-1] > n:
        raise ValueError("constraint times must be distinct and lie in (0, N]")
    for _, target in constraints:
        if target[0] not in ("point", "ball"):
            raise ValueError("targets are ('point', z) or ('ball', x, r)")

    m_last = times[-1]
    back = backward_field_slices(env, coupling, n, [m_last, 0], truncation=truncation)
    b_last = next(f for f in back if f.time == m_last)
    b_zero = next(f for f in back if f.time == 0)
    z_norm = b_zero.value_at((0, 0))
    if z_norm.mantissa <= 0.0:
        raise ValueError("partition value vanished")

    field: WeightField | None = None
    t_prev = 0
    for m, target in constraints:
        field = forward_field(
            env,
            coupling,
            (t_prev, (0, 0)),
            m,
            truncation=truncation,
            init_field=field,
        )
        field = _apply_target(field, target, coupling.n)
        if field.values.max() <= 0.0:
            return 0.0
        t_prev = m
    if m_last == n:
        # B_n = 1: the closing factor is just the constrained forward mass
        num = field.total()
        return num.ratio(z_norm)
    num = field_product_mass(field, b_last)
    return num.ratio(z_norm)


def quenched_marginal_p2p(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    n: int,
    points: list[tuple[int, tuple[int, int]]],
    *,
    truncation: float | None = None,
) -> float:
    """The same marginal through the product of point-to-point values.

    P(S_{m_1}=z_1,...) = (1/Z) prod_j Zp2p(m_{j-1},z_{j-1} | m_j,z_j)
    q_{dm}(dz) * Z(m_K, z_K, N, *), an independent route used to cross-check
    the spliced-field evaluation.
    """
    points = sorted(points)
    z_total = point_to_plane(env, coupling, (0, (0, 0)), n, truncation=truncation)
    log_acc = -z_total.log()
    prev = (0, (0, 0))
    for m, z in points:
        pm, pz = prev
        val = point_to_point(
            env, coupling, prev, (m, z), endpoint_disorder=True, truncation=truncation
        )
        q = srw_prob(m - pm, (z[0] - pz[0], z[1] - pz[1]))
        if q == 0.0:
            return 0.0
        log_acc += val.log() + math.log(q)
        prev = (m, z)
    if prev[0] < n:
        tail = point_to_plane(env, coupling, prev, n, truncation=truncation)
        log_acc += tail.log()
    return math.exp(log_acc)
