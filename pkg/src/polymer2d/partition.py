"""Partition functions of the 2D directed polymer on a fixed disorder field.

All variants run through the same rotated-coordinate transfer matrix:

  * point-to-plane  Z(m,y,N,*)   -- forward weights at times m+1..N, free end;
  * plane-to-point  Z(m,*,n,z)   -- reversed evolution pinned at (n,z), weights
                                    at times m..n-1 (start slice included,
                                    endpoint excluded);
  * point-to-point  Z(m,y|n,z)   -- forward field divided by q_{n-m}(z-y),
                                    with or without the endpoint weight.

Slices are log-scaled: mantissas share a binary exponent, renormalized by
exact powers of two, so no variant can over- or underflow and results are
independent of the renormalization cadence.  A truncation window (off by
default) clips the cone at |a|, |b| <= ceil(c sqrt(N log N)) in rotated
coordinates and reports the clipped mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .disorder import EnvironmentSpec, ScaledCoupling
from .walk import BoxSpec, reachable, return_weights, srw_log_prob

_LN2 = math.log(2.0)
_EMPTY_BOXES = np.zeros((0, 5), dtype=np.int64)
_EMPTY_KS = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True)
class ScaledValue:
    """A signed value mantissa * 2^exp2 kept away from double over/underflow."""

    mantissa: float
    exp2: int = 0

    @property
    def value(self) -> float:
        return math.ldexp(self.mantissa, self.exp2)

    def __float__(self) -> float:
        return self.value

    @property
    def log_scale(self) -> float:
        return self.exp2 * _LN2

    def log_abs(self) -> float:
        return math.log(abs(self.mantissa)) + self.exp2 * _LN2

    def scaled_to(self, exp2: int) -> float:
        return math.ldexp(self.mantissa, self.exp2 - exp2)

    def __mul__(self, other: "ScaledValue") -> "ScaledValue":
        return ScaledValue(self.mantissa * other.mantissa, self.exp2 + other.exp2)

    def __sub__(self, other: "ScaledValue") -> "ScaledValue":
        e = max(self.exp2, other.exp2)
        return ScaledValue(self.scaled_to(e) - other.scaled_to(e), e)

    def ratio(self, other: "ScaledValue") -> float:
        return math.ldexp(self.mantissa / other.mantissa, self.exp2 - other.exp2)


class PartitionValue(ScaledValue):
    """A strictly positive ScaledValue; logs are always defined."""

    def __init__(self, mantissa: float, exp2: int = 0):
        if not mantissa > 0.0:
            raise ValueError("partition value must be positive")
        object.__setattr__(self, "mantissa", mantissa)
        object.__setattr__(self, "exp2", exp2)

    def log(self) -> float:
        return math.log(self.mantissa) + self.exp2 * _LN2


@dataclass(frozen=True)
class RawBox:
    """A literal space-time box (inclusive time range, sup-norm space radius)."""

    t_lo: int
    t_hi: int
    center: tuple[int, int]
    radius: int

    def contains(self, n: int, z: tuple[int, int]) -> bool:
        return (
            self.t_lo <= n <= self.t_hi
            and abs(z[0] - self.center[0]) <= self.radius
            and abs(z[1] - self.center[1]) <= self.radius
        )

    def as_row(self) -> tuple[int, int, int, int, int]:
        return self.t_lo, self.t_hi, self.center[0], self.center[1], self.radius


@dataclass(frozen=True)
class BoxMask:
    """Union of space-time boxes; disorder is active inside, off outside."""

    boxes: tuple[BoxSpec | RawBox, ...]

    @classmethod
    def whole_slab(cls, n: int) -> "BoxMask":
        return cls((RawBox(0, n, (0, 0), n + 1),))

    def contains(self, n: int, z: tuple[int, int]) -> bool:
        return any(b.contains(n, z) for b in self.boxes)

    def as_array(self) -> np.ndarray:
        if not self.boxes:
            return _EMPTY_BOXES
        return np.array([b.as_row() for b in self.boxes], dtype=np.int64)


def mesoscopic_mask(
    coupling: ScaledCoupling,
    gamma: float,
    *,
    start: tuple[int, tuple[int, int]] | None = None,
    end: tuple[int, tuple[int, int]] | None = None,
) -> BoxMask:
    """Forward box at the start point and/or backward box at the end point."""
    boxes = []
    if start is not None:
        boxes.append(BoxSpec(start[0], start[1], "forward", gamma, coupling.n))
    if end is not None:
        boxes.append(BoxSpec(end[0], end[1], "backward", gamma, coupling.n))
    return BoxMask(tuple(boxes))


@dataclass
class WeightField:
    """One time slice of the weighted walk mass on the rotated global grid.

    values[p, q] is the mantissa at global (i, j) = (offset_i + p, offset_j + q),
    i.e. at the lattice point x1 = i + j - time, x2 = i - j; the represented
    value is values * 2^exp2.  Entries outside the parity cone are exactly 0.
    """

    time: int
    offset_i: int
    offset_j: int
    values: np.ndarray
    exp2: int
    loss: ScaledValue = field(default_factory=lambda: ScaledValue(0.0, 0))

    @property
    def log_scale(self) -> float:
        return self.exp2 * _LN2

    def site_index(self, z: tuple[int, int]) -> tuple[int, int]:
        i = (self.time + z[0] + z[1]) // 2
        j = (self.time + z[0] - z[1]) // 2
        return i - self.offset_i, j - self.offset_j

    def value_at(self, z: tuple[int, int]) -> ScaledValue:
        if (self.time + z[0] + z[1]) % 2 != 0:
            return ScaledValue(0.0, 0)
        p, q = self.site_index(z)
        if 0 <= p < self.values.shape[0] and 0 <= q < self.values.shape[1]:
            return ScaledValue(float(self.values[p, q]), self.exp2)
        return ScaledValue(0.0, 0)

    def total(self) -> PartitionValue:
        return PartitionValue(float(np.sum(self.values)), self.exp2)

    def site_coords(self) -> tuple[np.ndarray, np.ndarray]:
        i = self.offset_i + np.arange(self.values.shape[0])
        j = self.offset_j + np.arange(self.values.shape[1])
        x1 = i[:, None] + j[None, :] - self.time
        x2 = i[:, None] - j[None, :]
        return x1, x2


def truncation_extent(n: int, c: float | None) -> int:
    """Window half-extent in rotated units; None means the exact cone."""
    if c is None or c <= 0.0:
        return 1 << 40
    if n < 2:
        return 1 << 40
    return int(math.ceil(c * math.sqrt(n * math.log(n))))


def _pad(values: np.ndarray) -> np.ndarray:
    out = np.zeros((values.shape[0] + 2, values.shape[1] + 2))
    out[1:-1, 1:-1] = values
    return out


def _run_forward(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    start: tuple[int, tuple[int, int]],
    end_time: int,
    mask: BoxMask | None,
    truncation: float | None,
    suppress_last: bool,
    capture_times: list[int] | None,
    init_field: WeightField | None,
) -> tuple[WeightField, list[PartitionValue]]:
    m0, z0 = start
    steps = end_time - m0
    if steps <= 0:
        raise ValueError("end_time must exceed the start time")
    T = min(truncation_extent(coupling.n, truncation), steps + 4)
    if init_field is None:
        init = np.zeros((3, 3))
        init[1, 1] = 1.0
        alo = ahi = blo = bhi = 0
        r1, r2 = z0
        e2 = 0
        off_i0 = off_j0 = None
    else:
        if init_field.time != m0:
            raise ValueError("initial field must sit at the segment start time")
        init = _pad(init_field.values)
        alo, blo = 0, 0
        ahi = 2 * (init_field.values.shape[0] - 1)
        bhi = 2 * (init_field.values.shape[1] - 1)
        r1 = init_field.offset_i + init_field.offset_j - m0
        r2 = init_field.offset_i - init_field.offset_j
        e2 = init_field.exp2
        off_i0, off_j0 = init_field.offset_i, init_field.offset_j
    caps = sorted(set(capture_times or []))
    cap_ks = np.array([t - m0 for t in caps], dtype=np.int64)
    if cap_ks.size and (cap_ks[0] < 1 or cap_ks[-1] > steps):
        raise ValueError("capture times must lie in (start, end]")
    boxes = mask.as_array() if mask is not None else _EMPTY_BOXES
    out = _kernels.evolve_field(
        env.key,
        np.int64(env.lid),
        coupling.beta_n,
        coupling.lambda1,
        np.int64(m0),
        np.int64(1),
        np.int64(r1),
        np.int64(r2),
        np.int64(steps),
        np.int64(T),
        init,
        np.int64(alo),
        np.int64(ahi),
        np.int64(blo),
        np.int64(bhi),
        np.int64(e2),
        suppress_last,
        cap_ks,
        boxes,
        mask is not None,
    )
    slab, ilo, jlo, wi, wj, e2_out, cap_mant, cap_e2, loss_mant, loss_e2 = out
    if off_i0 is None:
        base_i = (end_time + r1 + r2 - steps) // 2
        base_j = (end_time + r1 - r2 - steps) // 2
    else:
        base_i, base_j = off_i0, off_j0
    wf = WeightField(
        time=end_time,
        offset_i=int(base_i + ilo),
        offset_j=int(base_j + jlo),
        values=np.array(slab[1 : wi + 1, 1 : wj + 1]),
        exp2=int(e2_out),
        loss=ScaledValue(float(loss_mant), int(loss_e2)),
    )
    captures = [PartitionValue(float(m), int(e)) for m, e in zip(cap_mant, cap_e2)]
    return wf, captures


def forward_field(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    start: tuple[int, tuple[int, int]],
    end_time: int,
    mask: BoxMask | None = None,
    *,
    truncation: float | None = None,
    suppress_last: bool = False,
    capture_times: list[int] | None = None,
    init_field: WeightField | None = None,
) -> WeightField:
    """Forward weighted field from `start`, weights at times start+1 .. end_time."""
    wf, _ = _run_forward(
        env, coupling, start, end_time, mask, truncation, suppress_last, capture_times, init_field
    )
    return wf


def point_to_plane(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    start: tuple[int, tuple[int, int]],
    end_time: int,
    *,
    mask: BoxMask | None = None,
    truncation: float | None = None,
    capture_times: list[int] | None = None,
) -> PartitionValue | tuple[PartitionValue, list[PartitionValue]]:
    """Free-endpoint partition value; E over disorder is 1 by the cumulant tilt."""
    wf, caps = _run_forward(
        env, coupling, start, end_time, mask, truncation, False, capture_times, None
    )
    total = wf.total()
    if capture_times is None:
        return total
    return total, caps


def plane_to_point(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    start_time: int,
    end: tuple[int, tuple[int, int]],
    *,
    mask: BoxMask | None = None,
    truncation: float | None = None,
    capture_times: list[int] | None = None,
) -> PartitionValue | tuple[PartitionValue, list[PartitionValue]]:
    """Backward-evolving partition value pinned at `end`, free towards the plane.

    Weights are collected at times start_time .. end_time - 1: the pinned
    endpoint's slice is excluded and the start slice included, so the value
    has the same law as the forward point-to-plane over the same depth.
    """
    m1, z1 = end
    steps = m1 - start_time
    if steps <= 0:
        raise ValueError("end time must exceed start_time")
    if not reachable(m1, z1):
        raise ValueError("endpoint is not reachable from the origin")
    T = min(truncation_extent(coupling.n, truncation), steps + 4)
    caps = sorted(set(capture_times or []), reverse=True)
    cap_ks = np.array([m1 - t for t in caps], dtype=np.int64)
    if cap_ks.size and (cap_ks[0] < 1 or cap_ks[-1] > steps):
        raise ValueError("capture times must lie in [start_time, end)")
    init = np.zeros((3, 3))
    init[1, 1] = 1.0
    boxes = mask.as_array() if mask is not None else _EMPTY_BOXES
    out = _kernels.evolve_field(
        env.key,
        np.int64(env.lid),
        coupling.beta_n,
        coupling.lambda1,
        np.int64(m1),
        np.int64(-1),
        np.int64(z1[0]),
        np.int64(z1[1]),
        np.int64(steps),
        np.int64(T),
        init,
        np.int64(0),
        np.int64(0),
        np.int64(0),
        np.int64(0),
        np.int64(0),
        False,
        cap_ks,
        boxes,
        mask is not None,
    )
    slab, ilo, jlo, wi, wj, e2_out, cap_mant, cap_e2, _, _ = out
    total = PartitionValue(float(np.sum(slab[1 : wi + 1, 1 : wj + 1])), int(e2_out))
    if capture_times is None:
        return total
    captures = [PartitionValue(float(m), int(e)) for m, e in zip(cap_mant, cap_e2)]
    return total, captures


def point_to_point(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    start: tuple[int, tuple[int, int]],
    end: tuple[int, tuple[int, int]],
    endpoint_disorder: bool,
    *,
    mask: BoxMask | None = None,
    truncation: float | None = None,
) -> PartitionValue:
    """Pinned-endpoints partition value W_end(z) / q_{dn}(dz).

    Without endpoint disorder the weights run over times start+1 .. end-1;
    with the flag they include the endpoint slice as well.
    """
    (m0, z0), (m1, z1) = start, end
    lq = srw_log_prob(m1 - m0, (z1[0] - z0[0], z1[1] - z0[1]))
    if lq == -math.inf:
        raise ValueError("endpoint is not reachable from the start point")
    wf, _ = _run_forward(
        env, coupling, start, m1, mask, truncation, not endpoint_disorder, None, None
    )
    site = wf.value_at(z1)
    if site.mantissa <= 0.0:
        raise ValueError("endpoint mass vanished (truncation window too narrow)")
    lq2 = lq / _LN2
    e_int = math.floor(lq2)
    return PartitionValue(site.mantissa / (2.0 ** (lq2 - e_int)), site.exp2 - int(e_int))


def restricted_partition(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    variant: str,
    boxes: BoxMask,
    *,
    start: tuple[int, tuple[int, int]] = (0, (0, 0)),
    end: tuple[int, tuple[int, int]] | None = None,
    end_time: int | None = None,
    endpoint_disorder: bool = False,
    truncation: float | None = None,
) -> tuple[PartitionValue, PartitionValue, ScaledValue]:
    """Full value Z, boxed value Z^A (disorder off outside `boxes`), and Z - Z^A."""
    if variant == "point_to_plane":
        if end_time is None:
            raise ValueError("point_to_plane needs end_time")
        full = point_to_plane(env, coupling, start, end_time, truncation=truncation)
        boxed = point_to_plane(env, coupling, start, end_time, mask=boxes, truncation=truncation)
    elif variant == "plane_to_point":
        if end is None:
            raise ValueError("plane_to_point needs end")
        full = plane_to_point(env, coupling, start[0], end, truncation=truncation)
        boxed = plane_to_point(env, coupling, start[0], end, mask=boxes, truncation=truncation)
    elif variant == "point_to_point":
        if end is None:
            raise ValueError("point_to_point needs end")
        full = point_to_point(
            env, coupling, start, end, endpoint_disorder, truncation=truncation
        )
        boxed = point_to_point(
            env, coupling, start, end, endpoint_disorder, mask=boxes, truncation=truncation
        )
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return full, boxed, full - boxed


def backward_field_slices(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    n_hi: int,
    store_times: list[int],
    *,
    n_lo: int = 0,
    mask: BoxMask | None = None,
    truncation: float | None = None,
    init: WeightField | None = None,
) -> list[WeightField]:
    """Free-endpoint backward weights B_n on the origin grid, stored at given times.

    B_{n_hi} = 1 (or `init`), B_n(z) = (1/4) sum_{z'~z} w(n+1,z') B_{n+1}(z').
    """
    T = min(truncation_extent(coupling.n, truncation), n_hi + 4)
    wmax = min(n_hi, T + 2) + 1
    times = sorted(set(store_times), reverse=True)
    if times and (times[0] > n_hi or times[-1] < n_lo):
        raise ValueError("store times out of range")
    if init is None:
        from ._kernels import _window as _win  # window of the initial slice

        ilo0, ihi0 = _win(n_hi, 0, 0, T)
        w0 = ihi0 - ilo0 + 1
        init_arr = np.zeros((wmax + 3, wmax + 3))
        init_arr[1 : w0 + 1, 1 : w0 + 1] = 1.0
        e2_init = 0
    else:
        if init.time != n_hi:
            raise ValueError("initial backward slice must sit at n_hi")
        init_arr = np.zeros((wmax + 3, wmax + 3))
        v = init.values
        init_arr[1 : v.shape[0] + 1, 1 : v.shape[1] + 1] = v
        e2_init = init.exp2
    store = np.array(times, dtype=np.int64)
    out_slices = np.zeros((max(1, store.size), wmax + 3, wmax + 3))
    out_e2 = np.zeros(max(1, store.size), dtype=np.int64)
    g_dummy = np.zeros((1, 1, 1))
    boxes = mask.as_array() if mask is not None else _EMPTY_BOXES
    _kernels.evolve_backward(
        env.key,
        np.int64(env.lid),
        coupling.beta_n,
        coupling.lambda1,
        np.int64(n_hi),
        np.int64(n_lo),
        np.int64(T),
        init_arr,
        np.int64(e2_init),
        store,
        out_slices,
        out_e2,
        False,
        g_dummy,
        boxes,
        mask is not None,
    )
    from ._kernels import _window as _win

    fields = []
    for idx, t in enumerate(times):
        ilo, ihi = _win(t, 0, 0, T)
        w = ihi - ilo + 1
        fields.append(
            WeightField(
                time=t,
                offset_i=int(ilo),
                offset_j=int(ilo),
                values=np.array(out_slices[idx, 1 : w + 1, 1 : w + 1]),
                exp2=int(out_e2[idx]),
            )
        )
    return fields


def field_product_mass(a: WeightField, b: WeightField) -> PartitionValue:
    """sum_z A(z) B(z) over the common support of two same-time fields."""
    if a.time != b.time:
        raise ValueError("fields live at different times")
    ai, aj = a.offset_i, a.offset_j
    bi, bj = b.offset_i, b.offset_j
    lo_i = max(ai, bi)
    hi_i = min(ai + a.values.shape[0], bi + b.values.shape[0])
    lo_j = max(aj, bj)
    hi_j = min(aj + a.values.shape[1], bj + b.values.shape[1])
    if lo_i >= hi_i or lo_j >= hi_j:
        raise ValueError("fields have no common support")
    pa = a.values[lo_i - ai : hi_i - ai, lo_j - aj : hi_j - aj]
    pb = b.values[lo_i - bi : hi_i - bi, lo_j - bj : hi_j - bj]
    return PartitionValue(float(np.sum(pa * pb)), a.exp2 + b.exp2)


def two_replica_second_moment(
    coupling: ScaledCoupling,
    n: int | None = None,
    *,
    separation: tuple[int, int] = (0, 0),
    truncation: float | None = None,
    exact_limit: int = 512,
) -> float:
    """Exact E[Z(0,0,N,*) Z(0,u,N,*)] via the difference-walk dynamic program.

    The separation u must have even coordinate sum (both walks on one parity
    class).  Exact below `exact_limit`; beyond it the difference walk is
    windowed at c = 4 unless `truncation` overrides (clipped mass is below
    1e-15 of the result for every N on the ladder).
    """
    steps = coupling.n if n is None else n
    u1, u2 = separation
    if (u1 + u2) % 2 != 0:
        raise ValueError("separation must have even coordinate sum")
    d0i = (u1 + u2) // 2
    d0j = (u1 - u2) // 2
    if truncation is not None:
        T = truncation_extent(steps, truncation)
    elif steps <= exact_limit:
        T = steps
    else:
        T = truncation_extent(steps, 4.0)
    T = min(T, steps)
    mant, e2 = _kernels.second_moment_dp(
        coupling.sigma_sq, np.int64(steps), np.int64(d0i), np.int64(d0j), np.int64(T)
    )
    return math.ldexp(float(mant), int(e2))


def point_to_plane_many(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    starts: list[tuple[int, int]],
    end_time: int,
    *,
    truncation: float | None = None,
) -> list[float]:
    """Z(0, u, end_time, *) for several starts u on one disorder realization.

    The fields share the environment key, so the values are coupled exactly
    as the covariance experiments require; each start gets its own window.
    """
    return [
        point_to_plane(env, coupling, (0, u), end_time, truncation=truncation).value
        for u in starts
    ]


def forward_bundle(
    env: EnvironmentSpec,
    coupling: ScaledCoupling,
    start: tuple[int, tuple[int, int]],
    end_time: int,
    *,
    capture_times: list[int] | None = None,
    truncation: float | None = None,
) -> tuple[WeightField, list[PartitionValue]]:
    """Forward field plus the total masses captured at intermediate times."""
    return _run_forward(
        env, coupling, start, end_time, None, truncation, False, capture_times, None
    )


def chaos_second_moments(coupling: ScaledCoupling, n: int, k_max: int) -> np.ndarray:
    """Exact E[(Z^(k))^2] = sigma^{2k} u_k(N) for k = 0..k_max via the renewal DP.

    u_k(N) = sum over 0 < n_1 < ... < n_k <= N of prod r_{n_i - n_{i-1}} with
    r_m = q_{2m}(0); spatial sums collapse by Chapman-Kolmogorov, leaving a
    1D convolution per chaos order.  The DP runs with kernel r/R_N so every
    intermediate is <= 1; the identity sum_k E[(Z^(k))^2] = E[Z^2] holds
    against the difference-walk oracle to ~1e-12 relative.
    """
    if not 0 <= k_max <= n:
        raise ValueError("need 0 <= k_max <= N")
    r = return_weights(n)
    overlap = math.fsum(r)
    kernel = np.zeros(n + 1)
    kernel[1:] = r / overlap
    rho = coupling.sigma_sq * overlap
    out = np.empty(k_max + 1)
    out[0] = 1.0
    u = np.zeros(n + 1)
    u[0] = 1.0
    scale = 1.0
    for k in range(1, k_max + 1):
        u = np.convolve(u, kernel)[: n + 1]
        scale *= rho
        out[k] = scale * float(u.sum())
    return out


def chaos_sum(coupling: ScaledCoupling, n: int) -> float:
    """E[Z(0,0,N,*)^2] as the chaos series 1 + sum_k sigma^{2k} u_k(N).

    Terminates once the geometric envelope (sigma^2 R_N)^k falls below
    1e-18, which bounds the tail by the same amount.
    """
    r = return_weights(n)
    overlap = math.fsum(r)
    kernel = np.zeros(n + 1)
    kernel[1:] = r / overlap
    rho = coupling.sigma_sq * overlap
    if rho >= 1.0:
        raise ValueError("chaos series requires sigma^2 R_N < 1")
    total = 1.0
    u = np.zeros(n + 1)
    u[0] = 1.0
    scale = 1.0
    for _ in range(1, n + 1):
        u = np.convolve(u, kernel)[: n + 1]
        scale *= rho
        term = scale * float(u.sum())
        total += term
        if scale < 1e-18:
            break
    return total
