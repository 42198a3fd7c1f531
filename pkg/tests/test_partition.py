import math

import numpy as np
import pytest

from polymer2d import bruteforce as bf
from polymer2d.disorder import (
    GAUSSIAN,
    RADEMACHER,
    EnvironmentSpec,
    make_coupling,
    omega,
    site_weight,
    zero_coupling,
)
from polymer2d.partition import (
    BoxMask,
    RawBox,
    ScaledValue,
    WeightField,
    backward_field_slices,
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
from polymer2d.walk import reachable, replica_overlap, srw_prob


def env_and_coupling(law=GAUSSIAN, beta_hat=0.5, n=6, seed=91, replica=0):
    return EnvironmentSpec(law, seed, replica), make_coupling(law, beta_hat, n)


# ---------------------------------------------------------------- collapse


def test_zero_coupling_total_mass_is_one():
    env = EnvironmentSpec(GAUSSIAN, 7)
    c = zero_coupling(GAUSSIAN, 24)
    for end in (1, 5, 24):
        z = point_to_plane(env, c, (0, (0, 0)), end)
        assert z.value == 1.0  # dyadic arithmetic, exact
    assert plane_to_point(env, c, 0, (24, (2, 0))).value == 1.0
    assert point_to_point(env, c, (0, (0, 0)), (1, (1, 0)), endpoint_disorder=False).value == 1.0


def test_zero_coupling_field_matches_walk_kernel():
    env = EnvironmentSpec(GAUSSIAN, 7)
    c = zero_coupling(GAUSSIAN, 16)
    wf = forward_field(env, c, (0, (0, 0)), 16)
    for z in [(0, 0), (2, 0), (-4, 2), (16, 0), (3, 5)]:
        assert wf.value_at(z).value == pytest.approx(srw_prob(16, z), abs=1e-14)


# ---------------------------------------------------------------- N=1 cases


@pytest.mark.parametrize("law", [GAUSSIAN, RADEMACHER])
def test_single_step_values(law):
    env, c = env_and_coupling(law=law, n=1)
    direct = 0.25 * math.fsum(
        math.exp(c.beta_n * omega(env, 1, z) - c.lambda1)
        for z in [(1, 0), (-1, 0), (0, 1), (0, -1)]
    )
    assert point_to_plane(env, c, (0, (0, 0)), 1).value == pytest.approx(direct, rel=1e-14)
    # one-step point-to-point: 1 without endpoint disorder, the weight with it
    z = (1, 0)
    assert point_to_point(env, c, (0, (0, 0)), (1, z), False).value == pytest.approx(1.0, rel=1e-14)
    assert point_to_point(env, c, (0, (0, 0)), (1, z), True).value == pytest.approx(
        site_weight(env, c, 1, z), rel=1e-14
    )


def test_plane_to_point_single_step():
    env, c = env_and_coupling(n=8)
    n = 8
    val = plane_to_point(env, c, n - 1, (n, (2, 0)))
    direct = 0.25 * math.fsum(
        site_weight(env, c, n - 1, (2 + dx, 0 + dy))
        for dx, dy in [(1, 0), (-1, 0), (0, 1), (0, -1)]
    )
    assert val.value == pytest.approx(direct, rel=1e-14)


# ---------------------------------------------------------------- micro-oracle


@pytest.mark.parametrize("law", [GAUSSIAN, RADEMACHER])
@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_point_to_plane_vs_enumeration(law, n):
    for rep in range(3):
        env, c = env_and_coupling(law=law, n=n, replica=rep)
        expected = bf.point_to_plane_bf(env, c, n)
        got = point_to_plane(env, c, (0, (0, 0)), n).value
        assert got == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("n", [2, 4, 5])
def test_point_to_point_vs_enumeration(n):
    env, c = env_and_coupling(n=n)
    for x1 in range(-n, n + 1):
        for x2 in range(-n, n + 1):
            if not reachable(n, (x1, x2)):
                continue
            for flag in (False, True):
                expected = bf.point_to_point_bf(env, c, n, (x1, x2), flag)
                got = point_to_point(env, c, (0, (0, 0)), (n, (x1, x2)), flag).value
                assert got == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_plane_to_point_vs_enumeration(n):
    env, c = env_and_coupling(n=n, law=RADEMACHER)
    for start in range(0, n):
        for z in [(0, 0), (2, 0), (1, 1), (-1, 1)]:
            if not reachable(n, z):
                continue
            expected = bf.plane_to_point_bf(env, c, start, n, z)
            got = plane_to_point(env, c, start, (n, z)).value
            assert got == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("variant", ["point_to_plane", "point_to_point"])
def test_masked_variants_vs_enumeration(variant):
    n = 5
    env, c = env_and_coupling(n=n)
    mask = BoxMask((RawBox(1, 2, (0, 0), 1), RawBox(4, 5, (1, 0), 2)))
    if variant == "point_to_plane":
        expected = bf.point_to_plane_bf(env, c, n, mask=mask)
        got = point_to_plane(env, c, (0, (0, 0)), n, mask=mask).value
    else:
        z = (1, 0)
        expected = bf.point_to_point_bf(env, c, n, z, False, mask=mask)
        got = point_to_point(env, c, (0, (0, 0)), (n, z), False, mask=mask).value
    assert got == pytest.approx(expected, rel=1e-10)


def test_whole_slab_mask_is_noop():
    n = 32
    env, c = env_and_coupling(n=n)
    full = point_to_plane(env, c, (0, (0, 0)), n)
    masked = point_to_plane(env, c, (0, (0, 0)), n, mask=BoxMask.whole_slab(n))
    assert masked.value == pytest.approx(full.value, rel=1e-12)


def test_restricted_partition_remainder():
    n = 64
    env, c = env_and_coupling(n=n)
    boxes = mesoscopic_mask(c, 0.5, start=(0, (0, 0)))
    full, boxed, rem = restricted_partition(
        env, c, "point_to_plane", boxes, end_time=n
    )
    assert full.value == pytest.approx(boxed.value + rem.value, rel=1e-12)
    whole = restricted_partition(
        env, c, "point_to_plane", BoxMask.whole_slab(n), end_time=n
    )
    assert abs(whole[2].value) <= 1e-12 * whole[0].value


# ---------------------------------------------------------------- identities


def test_reconstruction_identity():
    # sum_z Z(0,0|N,z) e^{beta w - lambda} q_N(z) = Z(0,0,N,*) per realization
    n = 16
    env, c = env_and_coupling(n=n, seed=1212)
    z_total = point_to_plane(env, c, (0, (0, 0)), n).value
    acc = 0.0
    for x1 in range(-n, n + 1):
        for x2 in range(-n, n + 1):
            if not reachable(n, (x1, x2)):
                continue
            p2p = point_to_point(env, c, (0, (0, 0)), (n, (x1, x2)), True).value
            acc += p2p * srw_prob(n, (x1, x2))
    assert acc == pytest.approx(z_total, rel=1e-10)


def test_quenched_markov_consistency():
    n = 64
    env, c = env_and_coupling(n=n, seed=31)
    z_total = point_to_plane(env, c, (0, (0, 0)), n).value
    for m in (1, 17, 32, 63):
        fwd = forward_field(env, c, (0, (0, 0)), m)
        (bwd,) = backward_field_slices(env, c, n, [m])
        spliced = field_product_mass(fwd, bwd).value
        assert spliced == pytest.approx(z_total, rel=1e-10)


def test_backward_field_origin_value_is_partition():
    n = 48
    env, c = env_and_coupling(n=n, seed=5)
    (b0,) = backward_field_slices(env, c, n, [0])
    assert b0.value_at((0, 0)).value == pytest.approx(
        point_to_plane(env, c, (0, (0, 0)), n).value, rel=1e-10
    )


def test_truncated_field_matches_exact():
    n = 256
    env, c = env_and_coupling(n=n, seed=88)
    exact = point_to_plane(env, c, (0, (0, 0)), n).value
    trunc = point_to_plane(env, c, (0, (0, 0)), n, truncation=3.0)
    assert trunc.value == pytest.approx(exact, rel=1e-9)
    wf = forward_field(env, c, (0, (0, 0)), n, truncation=3.0)
    assert wf.loss.value <= 1e-9 * exact


def test_scaling_bookkeeping_is_exact():
    n = 32
    env, c = env_and_coupling(n=n, seed=3)
    base = forward_field(env, c, (0, (0, 0)), 16)
    shifted = WeightField(
        base.time, base.offset_i, base.offset_j, base.values.copy(), base.exp2 + 300
    )
    out1 = forward_field(env, c, (16, (0, 0)), n, init_field=base)
    out2 = forward_field(env, c, (16, (0, 0)), n, init_field=shifted)
    assert out2.exp2 - out1.exp2 == 300 or np.allclose(
        out2.values * 2.0 ** (out2.exp2 - out1.exp2 - 300), out1.values, rtol=0, atol=0
    )
    v1 = out1.total()
    v2 = out2.total()
    assert v2.log() - v1.log() == pytest.approx(300 * math.log(2.0), rel=1e-14)


def test_segmented_forward_equals_single_run():
    n = 40
    env, c = env_and_coupling(n=n, seed=14)
    whole = forward_field(env, c, (0, (0, 0)), n)
    first = forward_field(env, c, (0, (0, 0)), 17)
    second = forward_field(env, c, (17, (0, 0)), n, init_field=first)
    assert second.total().value == pytest.approx(whole.total().value, rel=1e-12)
    for z in [(0, 0), (4, 2), (-6, 0)]:
        assert second.value_at(z).value == pytest.approx(whole.value_at(z).value, rel=1e-12)


def test_capture_times_match_prefix_runs():
    n = 32
    env, c = env_and_coupling(n=n, seed=44)
    total, caps = point_to_plane(env, c, (0, (0, 0)), n, capture_times=[8, 20, 32])
    for t, cap in zip([8, 20, 32], caps):
        direct = point_to_plane(env, c, (0, (0, 0)), t)
        assert cap.value == pytest.approx(direct.value, rel=1e-12)
    assert caps[-1].value == pytest.approx(total.value, rel=1e-14)


def test_plane_to_point_captures():
    n = 30
    env, c = env_and_coupling(n=n, seed=45)
    z = (2, 0)
    total, caps = plane_to_point(env, c, 0, (n, z), capture_times=[20, 10, 0])
    for t, cap in zip([20, 10, 0], caps):
        direct = plane_to_point(env, c, t, (n, z))
        assert cap.value == pytest.approx(direct.value, rel=1e-12)
    assert caps[-1].value == pytest.approx(total.value, rel=1e-14)


# ---------------------------------------------------------------- moments


def test_two_replica_second_moment_trivial():
    c = zero_coupling(GAUSSIAN, 16)
    assert two_replica_second_moment(c, 16) == pytest.approx(1.0, rel=1e-14)
    c1 = make_coupling(GAUSSIAN, 0.5, 1)
    assert two_replica_second_moment(c1, 1) == pytest.approx(
        1.0 + c1.sigma_sq / 4.0, rel=1e-13
    )


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_two_replica_vs_enumeration(n):
    c = make_coupling(GAUSSIAN, 0.6, n)
    assert two_replica_second_moment(c, n) == pytest.approx(
        bf.second_moment_bf(c, n), rel=1e-11
    )


def test_two_replica_separation_vs_enumeration():
    n = 4
    c = make_coupling(GAUSSIAN, 0.6, n)
    for u in [(2, 0), (1, 1), (0, 2), (3, 1)]:
        assert two_replica_second_moment(c, n, separation=u) == pytest.approx(
            bf.second_moment_bf(c, n, separation=u), rel=1e-11
        )
    with pytest.raises(ValueError):
        two_replica_second_moment(c, n, separation=(1, 0))


@pytest.mark.parametrize("beta_hat", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("n", [64, 256])
def test_chaos_sum_equals_two_replica(beta_hat, n):
    c = make_coupling(GAUSSIAN, beta_hat, n)
    assert chaos_sum(c, n) == pytest.approx(two_replica_second_moment(c, n), rel=1e-10)


def test_chaos_moments_low_orders():
    n = 128
    c = make_coupling(GAUSSIAN, 0.5, n)
    m = chaos_second_moments(c, n, 6)
    assert m[0] == 1.0
    r, _ = replica_overlap(n)
    assert m[1] == pytest.approx(c.sigma_sq * r, rel=1e-12)
    # the chaos bound: E[(Z^(k))^2] <= (sigma^2 R_N)^k
    bound = (c.sigma_sq * r) ** np.arange(7)
    assert np.all(m <= bound * (1.0 + 1e-12))


def test_chaos_moments_vanish_without_disorder():
    c = zero_coupling(GAUSSIAN, 64)
    m = chaos_second_moments(c, 64, 5)
    assert m[0] == 1.0
    assert np.all(m[1:] == 0.0)


def test_chaos_bound_all_orders():
    n = 512
    c = make_coupling(GAUSSIAN, 0.7, n)
    m = chaos_second_moments(c, n, n)
    r, _ = replica_overlap(n)
    bound = np.exp(np.arange(n + 1) * math.log(c.sigma_sq * r))
    assert np.all(m <= bound * (1.0 + 1e-12))


# ---------------------------------------------------------------- monte carlo


@pytest.mark.slow
def test_point_to_plane_moments_match_oracle():
    n = 256
    law = RADEMACHER
    c = make_coupling(law, 0.5, n)
    reps = 10_000
    zs = np.empty(reps)
    for rep in range(reps):
        env = EnvironmentSpec(law, 321, rep)
        zs[rep] = point_to_plane(env, c, (0, (0, 0)), n, truncation=3.0).value
    se1 = zs.std(ddof=1) / math.sqrt(reps)
    assert abs(zs.mean() - 1.0) < 4 * se1
    z2 = zs * zs
    se2 = z2.std(ddof=1) / math.sqrt(reps)
    oracle = two_replica_second_moment(c, n)
    assert abs(z2.mean() - oracle) < 1.96 * se2


@pytest.mark.slow
def test_plane_to_point_distribution_matches_forward():
    n = 256
    law = RADEMACHER
    c = make_coupling(law, 0.5, n)
    reps = 10_000
    fwd = np.empty(reps)
    bwd = np.empty(reps)
    for rep in range(reps):
        env = EnvironmentSpec(law, 747, rep)
        fwd[rep] = point_to_plane(env, c, (0, (0, 0)), n, truncation=3.0).value
        bwd[rep] = plane_to_point(env, c, 0, (n, (0, 0)), truncation=3.0).value
    for a, b in [(fwd, bwd)]:
        se = math.hypot(a.std(ddof=1), b.std(ddof=1)) / math.sqrt(reps)
        assert abs(a.mean() - b.mean()) < 1.96 * se
        a2, b2 = a * a, b * b
        se2 = math.hypot(a2.std(ddof=1), b2.std(ddof=1)) / math.sqrt(reps)
        assert abs(a2.mean() - b2.mean()) < 1.96 * se2


@pytest.mark.slow
def test_small_coupling_collapse():
    # vanishing beta_hat sends var(log Z) to ~beta_hat^2 levels
    n = 1024
    c = make_coupling(RADEMACHER, 0.05, n)
    vals = []
    for rep in range(150):
        env = EnvironmentSpec(RADEMACHER, 99, rep)
        vals.append(point_to_plane(env, c, (0, (0, 0)), n, truncation=3.0).log())
    assert np.var(vals, ddof=1) < 0.01
