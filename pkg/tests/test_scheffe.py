"""
Tests pour le module scheffe
============================

Ensemble de Scheffé, règle de décision et version privée.
"""

import numpy as np
import pytest

from src.distributions import make_dist, sample
from src.exceptions import InvalidDistributionError
from src.scheffe import FIRST, SECOND, ScheffeWitness, ldp_scheffe, private_mass_estimate, scheffe_set, scheffe_test


@pytest.fixture
def pair():
    return make_dist([0.5, 0.3, 0.2]), make_dist([0.2, 0.3, 0.5])


@pytest.mark.unit
class TestScheffeSet:
    """Tests pour scheffe_set."""

    def test_strict_inequality(self, pair):
        q1, q2 = pair
        witness = scheffe_set(q1, q2)
        assert witness.mask.tolist() == [True, False, False]
        assert witness.q1S == pytest.approx(0.5)
        assert witness.q2S == pytest.approx(0.2)
        assert witness.gap == pytest.approx(0.3)

    def test_gap_equals_tv(self, rng):
        from src.distributions import tv_distance
        for _ in range(10):
            q1 = make_dist(rng.dirichlet(np.ones(8)))
            q2 = make_dist(rng.dirichlet(np.ones(8)))
            assert scheffe_set(q1, q2).gap == pytest.approx(tv_distance(q1, q2))

    def test_alphabet_mismatch(self):
        with pytest.raises(InvalidDistributionError):
            scheffe_set(make_dist([1.0]), make_dist([0.5, 0.5]))


@pytest.mark.unit
class TestDecision:
    """Tests pour la règle de décision."""

    def test_decide(self):
        witness = ScheffeWitness(mask=np.array([True, False]), q1S=0.6, q2S=0.2)
        assert witness.decide(0.55) == FIRST
        assert witness.decide(0.1) == SECOND

    def test_tie_goes_to_second(self):
        witness = ScheffeWitness(mask=np.array([True, False]), q1S=0.6, q2S=0.2)
        assert witness.decide(0.4) == SECOND

    def test_identical_hypotheses(self):
        q = make_dist([0.5, 0.5])
        assert scheffe_test([0, 1, 0], q, q) == SECOND


@pytest.mark.unit
class TestScheffeTest:
    """Tests pour le test non privé."""

    def test_picks_true_hypothesis(self, pair, rng):
        q1, q2 = pair
        assert scheffe_test(sample(q1, rng, size=2000), q1, q2) == FIRST
        assert scheffe_test(sample(q2, rng, size=2000), q1, q2) == SECOND

    def test_guarantee_holds_on_random_pairs(self, rng):
        """Avec beaucoup d'échantillons, le choix est à distance ≤ 3·d_TV(p, Q) + marge."""
        from src.distributions import tv_distance
        for _ in range(10):
            q1 = make_dist(rng.dirichlet(np.ones(5)))
            q2 = make_dist(rng.dirichlet(np.ones(5)))
            p = make_dist(rng.dirichlet(np.ones(5)))
            winner = (q1, q2)[scheffe_test(sample(p, rng, size=50_000), q1, q2)]
            best = min(tv_distance(p, q1), tv_distance(p, q2))
            assert tv_distance(p, winner) <= 3 * best + 0.05


@pytest.mark.unit
class TestPrivateScheffe:
    """Tests pour la version privée."""

    def test_private_estimate_unbiased(self, pair, rng):
        q1, q2 = pair
        witness = scheffe_set(q1, q2)
        estimate = private_mass_estimate(sample(q1, rng, size=100_000), witness, 1.0, rng)
        assert estimate == pytest.approx(0.5, abs=0.02)

    def test_ldp_scheffe_success_rate(self, pair):
        q1, q2 = pair
        rng = np.random.default_rng(77)
        wins = sum(ldp_scheffe(sample(q1, rng, size=3000), q1, q2, 1.0, rng) == FIRST for _ in range(50))
        assert wins >= 47

    def test_uses_supplied_witness(self, pair, rng):
        q1, q2 = pair
        witness = scheffe_set(q1, q2)
        samples = sample(q2, rng, size=3000)
        assert ldp_scheffe(samples, q1, q2, 2.0, rng, witness=witness) == SECOND
