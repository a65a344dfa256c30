import math

import numpy as np
import pytest

from cwtail.core.errors import (
    ConfigError,
    DegenerateTail,
    EstimationError,
    InvalidK,
    InvalidLevel,
    NonPositiveData,
    ZeroDenominator,
    ZeroHazardAtThreshold,
)
from cwtail.core.kernels import KernelSpec, eval_kernel
from cwtail.survival import HazardVariant
from cwtail.tail import (
    TailVariant,
    estimate_from_context,
    gamma_conditional,
    gamma_curve,
    gamma_unconditional,
    parse_tail_variant,
    prepare_conditional,
    threshold_from_k,
    weissman_quantile,
)

AL = KernelSpec.ASYMMETRIC_LINEAR
BQ = KernelSpec.BIQUADRATIC
NA = HazardVariant.NELSON_AALEN
KM = HazardVariant.NEG_LOG_KM


def _oracle(sample, x, h, kernel, k, variant):
    """Direct double loop over the definitions, no prefix sums or grouping."""
    kv = eval_kernel(kernel, (x - sample.x) / h)
    w = kv / kv.sum()
    z = sample.z.tolist()
    d = sample.delta.tolist() if variant is TailVariant.CENSORED else [True] * sample.n
    pos = [i for i in range(sample.n) if w[i] > 0]
    zs = sorted((z[i] for i in pos), reverse=True)
    n_eff = len(zs)
    y = zs[k]

    def hazard(t):
        prod = 1.0
        for s in sorted(set(z[i] for i in pos)):
            if s > t:
                break
            at_risk = sum(w[i] for i in pos if z[i] >= s)
            events = sum(w[i] for i in pos if z[i] == s and d[i])
            prod *= 1.0 - events / at_risk
        return math.inf if prod <= 0.0 else -math.log(prod)

    exc = sorted((i for i in pos if z[i] > y), key=lambda i: -z[i])
    if variant is TailVariant.COMPLETE_LITERAL:
        num = sum(w[i] * (math.log(z[i]) - math.log(y)) for i in exc)
        ref = math.log(math.log(n_eff / k))
        den = sum(w[i] * (math.log(math.log(n_eff / r)) - ref) for r, i in enumerate(exc, start=1))
        return num / den
    hy = hazard(y)
    used = [i for i in exc if math.isfinite(hazard(z[i]))]
    num = sum(w[i] * (math.log(z[i]) - math.log(y)) for i in used)
    den = sum(w[i] * (math.log(hazard(z[i])) - math.log(hy)) for i in used)
    return num / den


def test_unconditional_hand_example():
    est = gamma_unconditional([6.0, 1.0, 3.0, 2.0], 2)
    assert est.gamma_hat == pytest.approx(1.0, rel=1e-12)
    assert est.y_n == 3.0
    assert est.variant is TailVariant.UNCOND
    assert est.h is None


def test_unconditional_errors_and_degenerate():
    with pytest.raises(InvalidK):
        gamma_unconditional([1.0, 2.0, 3.0], 1)
    with pytest.raises(InvalidK):
        gamma_unconditional([1.0, 2.0, 3.0], 3)
    with pytest.raises(NonPositiveData):
        gamma_unconditional([0.0, 2.0, 3.0], 2)

    with pytest.warns(DegenerateTail):
        est = gamma_unconditional([1.0, 5.0, 5.0, 5.0], 2)
    assert est.gamma_hat == 0.0
    assert est.diagnostics["degenerate"] is True


def test_censored_hand_example_nelson_aalen(flat_sample):
    s = flat_sample([1.0, 2.0, 3.0, 6.0])
    est = gamma_conditional(s, 0.0, 1.0, BQ, 2, TailVariant.CENSORED, NA)
    assert est.gamma_hat == pytest.approx(0.794965, abs=1e-6)
    assert est.y_n == 2.0
    assert est.n_exceedances == 2
    assert est.hazard_at_threshold == pytest.approx(0.25 + 1 / 3)


def test_complete_sample_reduction_is_exact(random_sample, rng):
    for _ in range(500):
        s = random_sample(int(rng.integers(8, 30))).as_complete()
        x, h = float(rng.random()), 0.8
        try:
            a = gamma_conditional(s, x, h, AL, 3, TailVariant.CENSORED, NA)
        except EstimationError:
            continue
        b = gamma_conditional(s, x, h, AL, 3, TailVariant.COMPLETE_HAZARD, NA)
        assert a.gamma_hat == b.gamma_hat
        assert a.y_n == b.y_n


# With δ ≡ 1 every neighbour contributes a rounded factor 1 - w/R to the
# product (censored points contribute an exact 1.0), and the log-log
# spacings just above the threshold are differences of close numbers, so
# the two summation orders drift apart at about 1e-9.
_ORACLE_TOL = {
    TailVariant.CENSORED: dict(rel=1e-12, abs=1e-12),
    TailVariant.COMPLETE_LITERAL: dict(rel=1e-12, abs=1e-12),
    TailVariant.COMPLETE_HAZARD: dict(rel=1e-8, abs=1e-8),
}


@pytest.mark.parametrize("variant", [TailVariant.CENSORED, TailVariant.COMPLETE_HAZARD, TailVariant.COMPLETE_LITERAL])
def test_matches_direct_oracle(random_sample, rng, variant):
    checked = 0
    for _ in range(200):
        s = random_sample(int(rng.integers(5, 21)))
        x = float(rng.random())
        h = float(rng.uniform(0.3, 1.0))
        kernel = AL if rng.random() < 0.5 else BQ
        n_eff = int(np.sum(eval_kernel(kernel, (x - s.x) / h) > 0))
        if n_eff < 3:
            continue
        k = int(rng.integers(2, n_eff))
        try:
            est = gamma_conditional(s, x, h, kernel, k, variant, KM)
        except EstimationError:
            continue
        assert est.gamma_hat == pytest.approx(_oracle(s, x, h, kernel, k, variant), **_ORACLE_TOL[variant])
        checked += 1
    assert checked >= 50


def test_unconditional_matches_direct_oracle(rng):
    for _ in range(200):
        n = int(rng.integers(3, 21))
        z = (rng.weibull(0.8, n) + 0.01).tolist()
        k = int(rng.integers(2, n))
        top = sorted(z, reverse=True)
        num = sum(math.log(top[i]) - math.log(top[k - 1]) for i in range(k))
        den = sum(math.log(math.log(n / i)) - math.log(math.log(n / k)) for i in range(1, k + 1))
        assert gamma_unconditional(z, k).gamma_hat == pytest.approx(num / den, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("c", [1e-3, 7.0, 1e3])
@pytest.mark.parametrize("variant", [TailVariant.CENSORED, TailVariant.COMPLETE_HAZARD, TailVariant.COMPLETE_LITERAL])
def test_scale_invariance(random_sample, c, variant):
    s = random_sample(60)
    base = gamma_conditional(s, 0.5, 0.6, BQ, 10, variant)
    scaled = gamma_conditional(s.scaled(c), 0.5, 0.6, BQ, 10, variant)
    assert scaled.gamma_hat == pytest.approx(base.gamma_hat, rel=1e-10)
    u = gamma_unconditional(s.z, 10).gamma_hat
    assert gamma_unconditional(s.z * c, 10).gamma_hat == pytest.approx(u, rel=1e-10)
    assert scaled.y_n == pytest.approx(c * base.y_n, rel=1e-12)
    qb = weissman_quantile(0.01, base)
    qs = weissman_quantile(0.01, scaled)
    assert qs.q_hat == pytest.approx(c * qb.q_hat, rel=1e-9)


def test_threshold_ties_use_strict_exceedances(flat_sample):
    s = flat_sample([1.0, 2.0, 2.0, 5.0])
    assert threshold_from_k(s, 0.0, 1.0, BQ, 2) == 2.0
    est = gamma_conditional(s, 0.0, 1.0, BQ, 2, TailVariant.CENSORED, NA)
    assert est.y_n == 2.0
    assert est.n_exceedances == 1
    # under -log KM the only exceedance sits at the terminal +inf hazard
    with pytest.raises(ZeroDenominator):
        gamma_conditional(s, 0.0, 1.0, BQ, 2, TailVariant.CENSORED, KM)


def test_infinite_hazard_exceedances_are_dropped(flat_sample):
    s = flat_sample([1.0, 2.0, 3.0, 4.0, 8.0])
    est = gamma_conditional(s, 0.0, 1.0, BQ, 3)
    assert est.diagnostics["excluded_infinite"] == 1
    assert est.n_exceedances == 2


def test_conditional_errors(flat_sample):
    s = flat_sample([1.0, 2.0, 3.0, 6.0], [False, False, True, True])
    with pytest.raises(ZeroHazardAtThreshold):
        gamma_conditional(s, 0.0, 1.0, BQ, 2)
    with pytest.raises(InvalidK):
        gamma_conditional(s, 0.0, 1.0, BQ, 1)
    with pytest.raises(InvalidK):
        gamma_conditional(s, 0.0, 1.0, BQ, 4)
    with pytest.raises(ConfigError):
        prepare_conditional(s, 0.0, 1.0, BQ, TailVariant.UNCOND)
    with pytest.raises(ConfigError):
        parse_tail_variant("hill")


def test_gamma_curve_agrees_with_single_k(random_sample):
    s = random_sample(80)
    for variant in (TailVariant.CENSORED, TailVariant.COMPLETE_LITERAL, TailVariant.COMPLETE_HAZARD):
        ctx = prepare_conditional(s, 0.4, 0.5, AL, variant, NA)
        ks = list(range(0, ctx.n_eff + 2))
        curve = gamma_curve(ctx, ks)
        assert curve.shape == (len(ks),)
        for k, g in zip(ks, curve.tolist()):
            try:
                expected = estimate_from_context(ctx, k).gamma_hat
            except EstimationError:
                assert math.isnan(g)
                continue
            assert g == pytest.approx(expected, rel=1e-9)


def test_weissman_anchor_and_monotonicity(flat_sample):
    s = flat_sample([1.0, 2.0, 3.0, 6.0, 7.5, 11.0])
    tail = gamma_conditional(s, 0.0, 1.0, BQ, 3, TailVariant.CENSORED, NA)
    anchor = math.exp(-tail.hazard_at_threshold)
    q = weissman_quantile(anchor, tail)
    assert q.q_hat == pytest.approx(tail.y_n, rel=1e-12)
    assert q.anchored == (tail.y_n, tail.hazard_at_threshold, tail.gamma_hat)

    levels = [0.5, 0.1, 0.01, 0.001]
    qs = [weissman_quantile(p, tail).q_hat for p in levels]
    assert all(a < b for a, b in zip(qs, qs[1:]))

    expected = tail.y_n * (-math.log(0.01) / tail.hazard_at_threshold) ** tail.gamma_hat
    assert weissman_quantile(0.01, tail, alpha_input=0.99).q_hat == pytest.approx(expected)
    assert weissman_quantile(0.01, tail, alpha_input=0.99).alpha_input == 0.99


def test_weissman_rejects_bad_inputs(flat_sample):
    tail = gamma_conditional(flat_sample([1.0, 2.0, 3.0, 6.0]), 0.0, 1.0, BQ, 2, TailVariant.CENSORED, NA)
    for p in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(InvalidLevel):
            weissman_quantile(p, tail)
    with pytest.raises(ZeroHazardAtThreshold):
        weissman_quantile(0.05, tail, hazard_at_threshold=0.0)
    with pytest.raises(ZeroHazardAtThreshold):
        weissman_quantile(0.05, gamma_unconditional([1.0, 2.0, 3.0, 6.0], 2))


def test_weissman_refuses_a_degenerate_tail():
    with pytest.warns(DegenerateTail):
        flat = gamma_unconditional([1.0, 5.0, 5.0, 5.0], 2)
    with pytest.raises(EstimationError, match="gamma"):
        weissman_quantile(0.05, flat, hazard_at_threshold=1.0)
