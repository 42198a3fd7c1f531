"""Wiring tests for the experiment harness on miniature ladders.

Statistical gates are not asserted here (they need desk-scale ladders, see
test_acceptance); these tests check estimates against independent values,
report structure, and byte-level determinism across worker counts.
"""

import math

import numpy as np
import pytest

from polymer2d.config import parse_config_text
from polymer2d.disorder import RADEMACHER, EnvironmentSpec, make_coupling
from polymer2d.experiments import (
    EXPERIMENTS,
    covariance_vs_zeta,
    kernel_diagnostics,
    lognormal_limit,
    moment_crosschecks,
    nearest_admissible,
    polymer_llt,
    run_experiment,
    _zeta_separation,
)
from polymer2d.partition import point_to_plane, two_replica_second_moment
from polymer2d.reporting import report_csv_text

BASE = {
    "law": "rademacher",
    "beta_hat": "0.5",
    "seed": "7",
    "n_ladder": "16, 32, 64",
    "replicas": "300",
    "heavy_replicas": "120",
    "paths_per_replica": "2",
}


def cfg_text(extra=""):
    keys = dict(BASE)
    for line in extra.splitlines():
        if line.strip():
            k, v = (s.strip() for s in line.split("=", 1))
            keys[k] = v
    return parse_config_text("".join(f"{k} = {v}\n" for k, v in keys.items()))


def test_nearest_admissible():
    assert nearest_admissible(4, (1.6, 0.3)) == (2, 0)
    z = nearest_admissible(5, (1.6, 0.4))
    assert (5 + z[0] + z[1]) % 2 == 0


def test_zeta_separation_parity_and_scale():
    for n in (256, 1024):
        for zeta in (0.2, 0.5, 0.8):
            u = _zeta_separation(n, zeta)
            assert (u[0] + u[1]) % 2 == 0
            assert abs(u[0] - n ** (zeta / 2)) <= 2
        assert _zeta_separation(n, 1.0)[0] == pytest.approx(4 * int(math.sqrt(n)), abs=2)


def test_kernel_diagnostics_passes():
    rep = kernel_diagnostics(cfg_text())
    assert rep.passed
    assert any(r.statistic == "overlap_1" for r in rep.rows)


def test_lognormal_estimates_match_direct_computation():
    cfg = cfg_text()
    rep = lognormal_limit(cfg)
    row = next(r for r in rep.rows if r.statistic == "EZ" and r.n == 16)
    c = make_coupling(cfg.law, cfg.beta_hat, 16)
    direct = np.array(
        [
            point_to_plane(
                EnvironmentSpec(cfg.law, cfg.seed, r), c, (0, (0, 0)), 16,
                truncation=cfg.truncation,
            ).value
            for r in range(cfg.replicas_for(16))
        ]
    )
    assert row.estimate == pytest.approx(direct.mean(), rel=1e-12)
    oracle_row = next(r for r in rep.rows if r.statistic == "EZ2" and r.n == 32)
    assert oracle_row.target == pytest.approx(
        two_replica_second_moment(make_coupling(cfg.law, cfg.beta_hat, 32), 32), rel=1e-12
    )


def test_moment_crosschecks_exact_gates_pass():
    cfg = cfg_text()
    rep = moment_crosschecks(cfg)
    exact = [r for r in rep.rows if r.statistic.startswith("chaos")]
    assert exact and all(r.gate == "pass" for r in exact)


def test_covariance_zeta_zero_matches_oracle_gate():
    cfg = cfg_text("zeta_grid = 0.5, 1.0\n")
    rep = covariance_vs_zeta(cfg)
    row = next(r for r in rep.rows if r.statistic == "cov_zeta_0" and r.n == 64)
    assert row.gate in ("pass", "fail")
    assert row.target == pytest.approx(
        two_replica_second_moment(make_coupling(cfg.law, cfg.beta_hat, 64), 64), rel=1e-12
    )


def test_llt_disorder_free_row():
    cfg = cfg_text()
    rep = polymer_llt(cfg)
    rows = [r for r in rep.rows if r.statistic == "llt_disorder_free"]
    assert len(rows) == len(cfg.n_ladder)
    for r in rows:
        assert abs(r.estimate - 1.0) < 0.25  # tiny systems, loose sanity


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_reports_have_runtimes_and_rows(name):
    cfg = cfg_text("n_ladder = 8, 16\nreplicas = 150\nheavy_replicas = 100\n")
    rep = run_experiment(name, cfg)
    assert rep.rows
    assert all(r.gate in ("pass", "fail", "info") for r in rep.rows)
    assert rep.runtimes


def test_worker_count_does_not_change_bytes():
    cfg1 = cfg_text("workers = 1\n")
    cfg2 = cfg_text("workers = 4\n")
    a = report_csv_text(lognormal_limit(cfg1))
    b = report_csv_text(lognormal_limit(cfg2))
    assert a == b


def test_rerun_is_byte_identical():
    cfg = cfg_text()
    a = report_csv_text(covariance_vs_zeta(cfg))
    b = report_csv_text(covariance_vs_zeta(cfg))
    assert a == b


def test_closed_form_targets_in_reports():
    cfg = cfg_text()
    rep = lognormal_limit(cfg)
    var_row = next(r for r in rep.rows if r.statistic == "var_logZ")
    assert var_row.target == pytest.approx(math.log(4.0 / 3.0), abs=1e-12)
    assert var_row.target == pytest.approx(0.2876820724, abs=1e-9)
    mean_row = next(r for r in rep.rows if r.statistic == "mean_logZ")
    assert mean_row.target == pytest.approx(-0.1438410362, abs=1e-9)
    cov = covariance_vs_zeta(cfg_text("zeta_grid = 0.5\n"))
    cov_row = next(r for r in cov.rows if r.statistic == "cov_zeta_0.5")
    assert cov_row.target == pytest.approx(7.0 / 6.0, abs=1e-12)
    llt = polymer_llt(cfg_text())
    vr = next(r for r in llt.rows if r.statistic == "var_logV")
    assert vr.target == pytest.approx(2.0 * math.log(4.0 / 3.0), abs=1e-12)
    assert vr.target == pytest.approx(0.5753641449, abs=1e-9)
    mr = next(r for r in llt.rows if r.statistic == "mean_logV")
    assert mr.target == pytest.approx(-0.2876820724, abs=1e-9)
