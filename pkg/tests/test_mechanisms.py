"""
Tests pour le module mechanisms
===============================

Réponse aléatoire, débiaisage, bruit de Laplace et registre de confidentialité.
"""

import numpy as np
import pytest

from src.exceptions import ConfigError, PrivacyViolationError
from src.mechanisms import (
    PrivacyLedger,
    PrivacyParams,
    keep_probability,
    laplace_noise,
    laplace_scale,
    randomized_response,
    rr_debias,
    rr_output_law,
)


@pytest.mark.unit
class TestPrivacyParams:
    """Tests pour PrivacyParams."""

    def test_valid(self):
        params = PrivacyParams(1.0)
        assert params.noise_mode == "strict"

    @pytest.mark.parametrize("epsilon", [0.0, -1.0, 10.5])
    def test_epsilon_range(self, epsilon):
        with pytest.raises(ConfigError):
            PrivacyParams(epsilon)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            PrivacyParams(1.0, noise_mode="loose")


@pytest.mark.unit
class TestRandomizedResponse:
    """Tests pour la réponse aléatoire."""

    def test_keep_probability(self):
        assert keep_probability(np.log(3.0)) == pytest.approx(0.75)

    @pytest.mark.parametrize("epsilon", [0.1, 0.5, 1.0, 2.0, 5.0])
    def test_output_law_ratio_bounded(self, epsilon):
        """Le rapport des lois de sortie est borné par e^ε, avec égalité."""
        law0 = rr_output_law(0, epsilon)
        law1 = rr_output_law(1, epsilon)
        ratios = law0 / law1
        assert ratios.max() == pytest.approx(np.exp(epsilon))
        assert ratios.max() <= np.exp(epsilon) * (1 + 1e-12)
        assert law0.sum() == pytest.approx(1.0)

    def test_output_is_bit(self, rng):
        out = randomized_response(np.array([0, 1, 1, 0]), 1.0, rng)
        assert out.dtype == np.int8
        assert set(out.tolist()) <= {0, 1}
        assert randomized_response(1, 1.0, rng) in (0, 1)

    def test_empirical_flip_rate(self, rng):
        epsilon = 1.0
        out = randomized_response(np.ones(50_000, dtype=np.int8), epsilon, rng)
        assert out.mean() == pytest.approx(keep_probability(epsilon), abs=0.01)

    def test_debias_is_unbiased(self, rng):
        epsilon = 0.8
        bits = (rng.random(200_000) < 0.3).astype(np.int8)
        estimate = rr_debias(randomized_response(bits, epsilon, rng).mean(), epsilon)
        assert estimate == pytest.approx(0.3, abs=0.02)

    def test_debias_not_clamped(self):
        assert rr_debias(0.0, 1.0) < 0.0
        assert rr_debias(1.0, 1.0) > 1.0


@pytest.mark.unit
class TestLaplace:
    """Tests pour le bruit de Laplace."""

    def test_scale_modes(self):
        assert laplace_scale(2.0, 0.5, "strict") == pytest.approx(8.0)
        assert laplace_scale(2.0, 0.5, "paper") == pytest.approx(4.0)
        assert laplace_scale(2.0, 0.5, "nominal") == laplace_scale(2.0, 0.5, "paper")

    def test_scale_invalid(self):
        with pytest.raises(ConfigError):
            laplace_scale(-1.0, 1.0)
        with pytest.raises(ConfigError):
            laplace_scale(1.0, 1.0, "other")

    def test_noise_scalar(self, rng):
        assert isinstance(laplace_noise(1.0, 1.0, "strict", rng), float)

    def test_noise_zero_sensitivity(self, rng):
        assert np.all(laplace_noise(0.0, 1.0, "strict", rng, size=10) == 0.0)

    def test_noise_moments(self, rng):
        noise = laplace_noise(1.0, 1.0, "strict", rng, size=200_000)
        scale = laplace_scale(1.0, 1.0, "strict")
        assert noise.mean() == pytest.approx(0.0, abs=0.05)
        assert noise.var() == pytest.approx(2 * scale ** 2, rel=0.05)
        assert np.all(np.isfinite(noise))

    def test_density_ratio_bounded(self):
        """Deux valeurs à distance 2L: rapport des densités ≤ e^ε en mode strict."""
        from scipy.stats import laplace as laplace_law
        L, epsilon = 1.5, 0.7
        scale = laplace_scale(L, epsilon, "strict")
        grid = np.linspace(-20, 20, 401)
        ratio = laplace_law.pdf(grid - L, scale=scale) / laplace_law.pdf(grid + L, scale=scale)
        assert ratio.max() <= np.exp(epsilon) * (1 + 1e-9)


@pytest.mark.unit
class TestPrivacyLedger:
    """Tests pour PrivacyLedger."""

    def test_counts(self):
        ledger = PrivacyLedger()
        ledger.record([0, 1, 2], 0, "randomized_response", 1.0)
        ledger.record([3, 4], 1, "randomized_response", 1.0)
        ledger.record([], 2, "randomized_response", 1.0)
        assert ledger.participants == 5
        assert ledger.messages == 5
        assert ledger.assert_budget(1.0) is True

    def test_spend_per_user(self):
        ledger = PrivacyLedger()
        ledger.record([2, 0], 0, "laplace", 0.5)
        ledger.record([2], 0, "laplace", 0.25)
        ids, spend = ledger.spend_per_user()
        assert ids.tolist() == [0, 2]
        assert spend.tolist() == pytest.approx([0.5, 0.75])

    def test_multi_round_detected(self):
        ledger = PrivacyLedger()
        ledger.record([0, 1], 0, "randomized_response", 0.5)
        ledger.record([1], 1, "randomized_response", 0.5)
        assert len(ledger.violations(1.0)) == 1
        with pytest.raises(PrivacyViolationError):
            ledger.assert_budget(1.0)

    def test_over_budget_detected(self):
        ledger = PrivacyLedger()
        ledger.record([0], 0, "laplace", 1.0)
        ledger.record([0], 0, "laplace", 1.0)
        with pytest.raises(PrivacyViolationError):
            ledger.assert_budget(1.0)

    def test_empty_ledger(self):
        ledger = PrivacyLedger()
        assert ledger.participants == 0
        assert ledger.violations(1.0) == []
