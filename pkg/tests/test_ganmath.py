"""Adversarial / cycle objective math: closed forms, properties, gradients."""

import json
import math

import numpy as np
import pytest

from lunarkit.errors import EmptyBatchError, NonFiniteError, ShapeMismatchError
from lunarkit.ganmath import (
    LOSS_REPORT_FIELDS,
    PROB_EPS,
    LossReport,
    ProbBatch,
    combined_objective,
    cycle_loss,
    discriminator_loss,
    gan_value_estimate,
    generator_loss,
)
from lunarkit.raster import ImageRaster

from oracles import l1_oracle

# frozen from a 50-digit evaluation of the closed forms
VALUE_09_08 = -0.32850406697203605
NONSAT_025_075 = 0.8369882167858358
TWO_LN_TWO = 2.0 * math.log(2.0)


class TestValueEstimate:
    def test_symmetric_half(self):
        assert gan_value_estimate(ProbBatch([0.5], [0.5])) == pytest.approx(
            -TWO_LN_TWO, abs=1e-15
        )

    def test_two_element_batch(self):
        v = gan_value_estimate(ProbBatch([0.9, 0.8], [0.1, 0.2]))
        assert v == pytest.approx(VALUE_09_08, abs=1e-15)

    def test_supremum_at_perfect_discriminator(self):
        # all d_real -> 1-, all d_fake -> 0+ drives the value to 0-
        v = gan_value_estimate(ProbBatch([1.0 - 1e-9], [1e-9]))
        assert -1e-5 < v < 0.0

    def test_clamping_keeps_boundary_batches_finite(self):
        v = gan_value_estimate(ProbBatch([1.0], [0.0]))
        assert math.isfinite(v)
        assert v == pytest.approx(2 * math.log(1 - PROB_EPS), rel=1e-9)

    def test_empty_batch(self):
        with pytest.raises(EmptyBatchError):
            ProbBatch([], [0.5])
        with pytest.raises(EmptyBatchError):
            ProbBatch([0.5], [])


class TestDiscriminatorLoss:
    def test_exact_negation(self):
        for d_real, d_fake in [([0.5], [0.5]), ([0.9, 0.8], [0.1, 0.2]), ([0.01], [0.99])]:
            b = ProbBatch(d_real, d_fake)
            assert discriminator_loss(b) == -gan_value_estimate(b)

    def test_symmetric_half_positive(self):
        assert discriminator_loss(ProbBatch([0.5], [0.5])) == pytest.approx(TWO_LN_TWO)

    def test_perfect_discriminator_near_zero(self):
        loss = discriminator_loss(ProbBatch([1.0], [0.0]))
        assert 0.0 < loss < 1e-5


class TestGeneratorLoss:
    def test_saturating_half(self):
        assert generator_loss([0.5], "saturating") == pytest.approx(math.log(0.5))

    def test_non_saturating_half(self):
        assert generator_loss([0.5], "non_saturating") == pytest.approx(-math.log(0.5))

    def test_non_saturating_pair(self):
        assert generator_loss([0.25, 0.75], "non_saturating") == pytest.approx(
            NONSAT_025_075, abs=1e-15
        )

    def test_default_variant_is_non_saturating(self):
        assert generator_loss([0.3]) == generator_loss([0.3], "non_saturating")

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            generator_loss([0.5], "wasserstein")

    def test_empty(self):
        with pytest.raises(EmptyBatchError):
            generator_loss([])

    @pytest.mark.parametrize("d", [0.1, 0.5, 0.9])
    def test_gradient_matches_analytic(self, d):
        # non_saturating: dL/dd_i = -1 / (n * d_i)
        n = 3
        h = 1e-7
        probs = [d, 0.4, 0.6]
        up = probs.copy()
        up[0] = d + h
        down = probs.copy()
        down[0] = d - h
        fd = (generator_loss(up) - generator_loss(down)) / (2 * h)
        analytic = -1.0 / (n * d)
        assert fd == pytest.approx(analytic, rel=1e-6)

    @pytest.mark.parametrize("d", [0.1, 0.5, 0.9])
    def test_saturating_gradient_matches_analytic(self, d):
        # saturating: dL/dd_i = -1 / (n * (1 - d_i))
        n = 2
        h = 1e-7
        fd = (
            generator_loss([d + h, 0.5], "saturating")
            - generator_loss([d - h, 0.5], "saturating")
        ) / (2 * h)
        assert fd == pytest.approx(-1.0 / (n * (1.0 - d)), rel=1e-6)


class TestCycleLoss:
    def test_identity_zero(self):
        x = np.arange(12, dtype=np.float64)
        assert cycle_loss(x, x.copy()) == 0.0

    def test_forced_small(self):
        assert cycle_loss([0.0, 0.0], [1.0, 3.0]) == 2.0

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=50), rng.normal(size=50)
        assert cycle_loss(a, b) == cycle_loss(b, a)

    def test_accepts_rasters(self):
        a = ImageRaster(2, 2, 1, np.array([1.0, 2.0, 3.0, 4.0]))
        b = ImageRaster(2, 2, 1, np.array([1.0, 2.0, 3.0, 5.0]))
        assert cycle_loss(a, b) == pytest.approx(0.25)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            cycle_loss(np.zeros(3), np.zeros(4))

    def test_against_naive_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a = rng.normal(0, 10, 257)
            b = rng.normal(0, 10, 257)
            got = cycle_loss(a, b)
            want = l1_oracle(a, b)
            assert got == pytest.approx(want, rel=1e-12)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            x, y, z = rng.normal(0, 5, (3, 64))
            assert cycle_loss(x, z) <= cycle_loss(x, y) + cycle_loss(y, z) + 1e-12

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            a = rng.normal(size=32)
            b = a + rng.choice([0.0, 1e-9], size=32)
            loss = cycle_loss(a, b)
            assert loss >= 0.0
            assert (loss == 0.0) == bool(np.array_equal(a, b))


class TestOptimalDiscriminatorBound:
    def test_sweep(self):
        # V(d) = ln d + ln(1-d) <= -2 ln 2, equality only at d = 0.5
        best = max(
            gan_value_estimate(ProbBatch([i / 1000], [i / 1000])) for i in range(1, 1000)
        )
        assert best == pytest.approx(-TWO_LN_TWO, abs=1e-12)
        for i in (1, 250, 499, 501, 750, 999):
            d = i / 1000
            v = gan_value_estimate(ProbBatch([d], [d]))
            assert v <= -TWO_LN_TWO + 1e-12
            if d != 0.5:
                assert v < -TWO_LN_TWO


class TestCombinedObjective:
    def test_zeros(self):
        assert combined_objective(0, 0, 0, 0, 0) == 0.0

    def test_lambda_zero_keeps_adversarial_only(self):
        assert combined_objective(1.5, -0.5, 9.0, 9.0, 0.0) == 1.0

    def test_forced(self):
        assert combined_objective(1.0, 1.0, 0.5, 0.5, 10.0) == 12.0

    def test_non_finite(self):
        with pytest.raises(NonFiniteError):
            combined_objective(math.nan, 0, 0, 0, 1)
        with pytest.raises(NonFiniteError):
            combined_objective(0, math.inf, 0, 0, 1)

    def test_negative_lambda(self):
        with pytest.raises(ValueError):
            combined_objective(0, 0, 0, 0, -1.0)


class TestLossReport:
    def make(self):
        g = generator_loss([0.4]) + generator_loss([0.6])
        cf, cb = 0.25, 0.125
        lam = 10.0
        return LossReport(
            value_estimate=gan_value_estimate(ProbBatch([0.7], [0.4])),
            d_loss=discriminator_loss(ProbBatch([0.7], [0.4])),
            g_loss=g,
            cycle_forward=cf,
            cycle_backward=cb,
            total=combined_objective(g, 0.0, cf, cb, lam),
            lambda_cyc=lam,
        )

    def test_total_recomputes(self):
        report = self.make()
        assert report.recomputed_total() == report.total

    def test_json_field_names_and_order(self):
        obj = self.make().to_dict()
        assert tuple(obj) == LOSS_REPORT_FIELDS
        again = LossReport.from_dict(json.loads(json.dumps(obj)))
        assert again == self.make()

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteError):
            LossReport(math.nan, 0, 0, 0, 0, 0, 10)
