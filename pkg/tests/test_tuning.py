import logging
import math

import numpy as np
import pytest

from cwtail.core.errors import ConfigError, EstimationError, InvalidSample, ZeroHazardAtThreshold
from cwtail.core.kernels import KernelSpec, eval_kernel
from cwtail.core.types import CensoredSample
from cwtail.tuning import (
    BandwidthGrid,
    cv_bandwidth,
    cv_criterion,
    cv_scores,
    cv_select,
    default_grid,
    per_k_estimates,
    select_k,
    select_k_at,
)

BQ = KernelSpec.BIQUADRATIC
AL = KernelSpec.ASYMMETRIC_LINEAR


def _cv_oracle(sample, h, kernel):
    x, z, d = sample.x.tolist(), sample.z.tolist(), sample.delta.tolist()
    n = len(z)
    total = 0.0
    for i in range(n):
        w = [0.0 if j == i else float(eval_kernel(kernel, (x[i] - x[j]) / h)) for j in range(n)]
        for j in range(n):
            surv = 1.0
            if sum(w) > 0:
                for s in sorted(set(z)):
                    if s > z[j]:
                        break
                    at_risk = sum(w[m] for m in range(n) if z[m] >= s)
                    events = sum(w[m] for m in range(n) if z[m] == s and d[m])
                    if at_risk > 0:
                        surv *= 1.0 - events / at_risk
            total += ((1.0 if z[i] > z[j] else 0.0) - surv) ** 2
    return total


def test_cv_criterion_matches_direct_oracle():
    # the outlier at x = 5 has nobody within h, its leave-one-out survival is 1
    s = CensoredSample.from_arrays([0.0, 0.1, 0.2, 5.0], [1.3, 0.4, 2.2, 0.9], [True, False, True, True])
    for h in (0.15, 0.5, 3.0):
        assert cv_criterion(s, h, BQ) == pytest.approx(_cv_oracle(s, h, BQ), rel=1e-10, abs=1e-12)


def test_cv_criterion_with_ties_matches_oracle(rng):
    x = rng.random(12)
    z = np.round(rng.weibull(1.2, 12) + 0.05, 1)
    s = CensoredSample.from_arrays(x, z, rng.random(12) > 0.3)
    assert cv_criterion(s, 0.4, AL) == pytest.approx(_cv_oracle(s, 0.4, AL), rel=1e-10)


def test_cv_is_permutation_invariant(random_sample, rng):
    s = random_sample(30)
    grid = default_grid(s, size=8)
    perm = rng.permutation(s.n)
    a = cv_scores(s, grid, BQ)
    b = cv_scores(s.take(perm), grid, BQ)
    assert b == pytest.approx(a, rel=1e-12)


def test_cv_select_returns_grid_member(random_sample):
    s = random_sample(40)
    grid = default_grid(s, size=10)
    sel = cv_select(s, grid, BQ)
    assert sel.h in grid.candidates
    assert sel.scores[grid.candidates.index(sel.h)] == min(sel.scores)
    df = sel.to_frame()
    assert list(df.columns) == ["h", "criterion"]
    assert len(df) == 10


def test_cv_ties_go_to_smallest_h(random_sample):
    # K = 1 everywhere: every candidate scores the same
    s = random_sample(10)
    sel = cv_select(s, BandwidthGrid((1.0, 2.0, 3.0)), KernelSpec.UNIFORM)
    assert sel.h == 1.0
    assert sel.on_boundary


def test_boundary_choice_is_logged(random_sample, caplog):
    s = random_sample(10)
    with caplog.at_level(logging.WARNING, logger="cwtail.tuning"):
        cv_select(s, BandwidthGrid((1.0, 2.0, 3.0)), KernelSpec.UNIFORM)
    assert any("grid boundary" in r.getMessage() for r in caplog.records)

    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="cwtail.tuning"):
        cv_select(s, BandwidthGrid((1.0,)), KernelSpec.UNIFORM)
    assert not caplog.records


def test_singleton_grid_skips_the_criterion():
    tiny = CensoredSample.from_arrays([0.0, 1.0], [1.0, 2.0])
    assert cv_bandwidth(tiny, BandwidthGrid((0.7,)), BQ) == 0.7
    with pytest.raises(InvalidSample):
        cv_criterion(tiny, 0.7, BQ)


def test_default_grid_and_validation():
    s = CensoredSample.from_arrays([0.0, 4.0, 10.0], [1.0, 2.0, 3.0])
    grid = default_grid(s)
    assert len(grid) == 20
    assert grid.candidates[0] == pytest.approx(0.5)
    assert grid.candidates[-1] == pytest.approx(20.0)
    ratios = np.diff(np.log(grid.candidates))
    assert ratios == pytest.approx(np.full(19, ratios[0]))

    with pytest.raises(ConfigError):
        default_grid(CensoredSample.from_arrays([3.0, 3.0], [1.0, 2.0]))
    with pytest.raises(ConfigError):
        BandwidthGrid(())
    with pytest.raises(ConfigError):
        BandwidthGrid((0.2, 0.1))
    with pytest.raises(ConfigError):
        BandwidthGrid((0.0, 1.0))
    with pytest.raises(ConfigError):
        BandwidthGrid((1.0, math.inf))


def test_select_k_short_sequence_uses_single_block():
    trace = select_k([0.5, 0.7, 0.4, 0.6, 0.55, 0.65, 0.45])
    assert trace.blocks == ((1, 7),)
    assert trace.chosen_k == 4


def test_select_k_constant_estimates_pick_first_block():
    assert select_k([0.25] * 20).chosen_k == 5
    assert select_k([0.25] * 20).chosen_block == 0


def test_select_k_prefers_stable_block(rng):
    est = np.r_[rng.normal(0.5, 0.2, 10), np.full(10, 0.5), rng.normal(0.5, 0.2, 5)]
    trace = select_k(est)
    # the trailing partial block does not compete
    assert trace.blocks == ((1, 10), (11, 20))
    assert trace.chosen_k == 15
    assert trace.chosen_block == 1
    assert trace.block_sds[1] == 0.0

    shifted = select_k(est + 3.7)
    assert shifted.chosen_k == trace.chosen_k


def test_select_k_missing_entries():
    est = [0.5, 0.6, 0.4, 0.55, math.nan, 0.52, 0.48, 0.5, 0.51, 0.49]
    assert select_k(est).chosen_k == 4

    # first block mostly missing, second one wins
    mostly_nan = [math.nan] * 6 + [0.1] * 4 + [0.2, 0.21, 0.19, 0.2, 0.22, 0.18, 0.2, 0.21, 0.2, 0.19]
    trace = select_k(mostly_nan)
    assert math.isnan(trace.block_sds[0])
    assert trace.chosen_k == 15

    with pytest.raises(EstimationError):
        select_k([math.nan] * 12)
    with pytest.raises(EstimationError):
        select_k([])


def test_select_k_trace_frame():
    trace = select_k(np.linspace(0.1, 0.3, 12))
    df = trace.to_frame()
    assert list(df.columns) == ["k", "gamma_hat", "block", "block_sd", "chosen"]
    assert df["chosen"].sum() == 1
    assert int(df.loc[df["chosen"], "k"].iloc[0]) == trace.chosen_k
    assert math.isnan(df.loc[df["k"] == 12, "block_sd"].iloc[0])


def test_per_k_estimates_and_select_k_at(random_sample):
    s = random_sample(120)
    est = per_k_estimates(s, 0.5, 0.4, BQ)
    assert math.isnan(est[0])  # k = 1 is never valid
    assert np.isfinite(est).sum() > 50
    trace = select_k_at(s, 0.5, 0.4, BQ)
    assert 2 <= trace.chosen_k < len(est) + 1
    assert np.isfinite(est[trace.chosen_k - 1])


def test_per_k_estimates_reraises_the_real_error(flat_sample):
    s = flat_sample([1.0, 2.0, 3.0, 4.0, 5.0], [False] * 5)
    with pytest.raises(ZeroHazardAtThreshold):
        per_k_estimates(s, 0.0, 1.0, BQ)
