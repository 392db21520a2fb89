"""
Tests pour le module harness
============================

Configuration d'expérience, flux aléatoires par essai, exécution des
commandes, synthèse statistique et jeu de borne inférieure.
"""

import math

import numpy as np
import pandas as pd
import pytest

from src.exceptions import ConfigError, InfeasibleInstanceError
from src.harness import (
    ExperimentConfig,
    approximation_bound,
    derive_rng,
    generate_values,
    play_game_trial,
    prepare_instance,
    run_experiment,
    run_lowerbound_game,
    summarize,
)
from src.storage import RECORD_COLUMNS


@pytest.mark.unit
class TestExperimentConfig:
    """Tests pour ExperimentConfig."""

    def test_defaults(self):
        config = ExperimentConfig.from_params(command="maxselect")
        assert config.k == 8
        assert config.algo == "better"
        assert config.sweep_points() == [None]

    def test_reduction_h_constant(self):
        assert ExperimentConfig.from_params(command="hs").reduction_h_constant == 2.0
        assert ExperimentConfig.from_params(command="ni", noise_mode="paper").noise_mode == "paper"
        with pytest.raises(ConfigError):
            ExperimentConfig.from_params(command="hs", reduction_h_constant=0.0)

    def test_none_values_dropped(self):
        config = ExperimentConfig.from_params(command="ni", n=None, trials=None)
        assert config.trials == 100

    @pytest.mark.parametrize("params", [
        {"command": "ni", "epsilon": 0.0},
        {"command": "ni", "epsilon": 11.0},
        {"command": "hs", "algo": "knockout"},
        {"command": "maxselect", "algo": "naive"},
        {"command": "ni", "n_sweep": [100, 0]},
        {"command": "sort"},
        {"command": "game", "budget": -1},
    ])
    def test_invalid(self, params):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_params(**params)

    def test_sweep_points(self):
        config = ExperimentConfig.from_params(command="ni", n_sweep=[100, 200])
        assert config.sweep_points() == [100, 200]


@pytest.mark.unit
class TestRandomStreams:
    """Tests pour derive_rng."""

    def test_deterministic(self):
        a = derive_rng(3, "ni", 5).random(4)
        b = derive_rng(3, "ni", 5).random(4)
        assert np.array_equal(a, b)

    def test_independent_labels_and_trials(self):
        base = derive_rng(3, "ni", 5).random()
        assert derive_rng(3, "hs", 5).random() != base
        assert derive_rng(3, "ni", 6).random() != base
        assert derive_rng(4, "ni", 5).random() != base


@pytest.mark.unit
class TestValues:
    """Tests pour generate_values et approximation_bound."""

    def test_spaced(self, rng):
        values = generate_values("spaced", 6, rng)
        assert sorted(values.tolist()) == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]

    def test_random_range(self, rng):
        values = generate_values("random", 40, rng)
        assert values.min() >= 0.0 and values.max() <= 10.0

    def test_clustered(self, rng):
        values = np.sort(generate_values("clustered", 16, rng))
        cluster = values[-4:]
        assert cluster.max() - cluster.min() <= 1.0
        assert cluster.min() - values[-5] > 1.0

    def test_unknown(self, rng):
        with pytest.raises(ConfigError):
            generate_values("gaussian", 4, rng)

    def test_bounds(self):
        assert approximation_bound("round_robin", 10, 1) == 2.0
        assert approximation_bound("multi_round", 10, 3) == 6.0
        assert approximation_bound("better", 10, 3) == 3.0
        assert approximation_bound("knockout", 10, 3) == 4.0


@pytest.mark.unit
class TestPrepareInstance:
    """Tests pour prepare_instance."""

    def test_peaked(self):
        config = ExperimentConfig.from_params(command="ni", generator="peaked", k=4, N=4, peak=0.7)
        Q, p, meta = prepare_instance(config)
        assert Q.k == 4
        assert p is Q[meta.true_index]
        assert meta.beta == 0.0

    def test_deterministic(self):
        config = ExperimentConfig.from_params(command="ni", generator="random", k=4, N=10, separation=0.2, seed=9)
        Q1, _, meta1 = prepare_instance(config)
        Q2, _, meta2 = prepare_instance(config)
        assert np.array_equal(Q1.matrix, Q2.matrix)
        assert meta1.true_index == meta2.true_index

    def test_hard(self):
        config = ExperimentConfig.from_params(command="ni", generator="hard", d=3, separation=0.2)
        Q, _, _ = prepare_instance(config)
        assert Q.k == 6 and Q.alphabet_size == 8

    def test_agnostic(self):
        config = ExperimentConfig.from_params(command="hs", generator="agnostic", k=4, N=10,
                                              separation=0.2, beta=0.05)
        Q, p, meta = prepare_instance(config)
        assert meta.true_index is None
        assert meta.beta <= 0.05 + 1e-9

    def test_infeasible_hard(self):
        config = ExperimentConfig.from_params(command="ni", generator="hard", d=3, separation=0.8)
        with pytest.raises(InfeasibleInstanceError):
            prepare_instance(config)


@pytest.mark.integration
class TestRunExperiment:
    """Tests d'exécution des commandes."""

    def test_maxselect_multi_round(self):
        config = ExperimentConfig.from_params(command="maxselect", k=30, t=2, adversary="greedy_adaptive",
                                              values="random", algo="multi_round", trials=8, seed=1)
        result = run_experiment(config)
        assert list(result.records["trial"]) == list(range(8))
        assert result.records["success"].all()
        assert result.records["queries"].nunique() == 1
        assert set(RECORD_COLUMNS["maxselect"]) <= set(result.records.columns)

    def test_maxselect_tournament(self):
        config = ExperimentConfig.from_params(command="maxselect", k=20, t=2, adversary="tournament",
                                              algo="better", trials=4, seed=2)
        result = run_experiment(config)
        assert (result.records["rounds"] <= 2).all()

    def test_ni_sweep(self):
        config = ExperimentConfig.from_params(command="ni", generator="peaked", k=4, N=4, peak=0.7,
                                              n_sweep=[400, 800], trials=3, seed=0)
        result = run_experiment(config)
        assert len(result.records) == 6
        assert sorted(result.records["n"].unique().tolist()) == [400, 800]
        assert len(result.summary) == 2
        assert "success_mean" in result.summary.columns
        assert (result.records["Nprime"] == 12).all()

    def test_ni_requires_n(self):
        config = ExperimentConfig.from_params(command="ni", generator="peaked", k=4, N=4, trials=1)
        with pytest.raises(ConfigError):
            run_experiment(config)

    def test_hs_exact(self):
        config = ExperimentConfig.from_params(command="hs", generator="peaked", k=4, N=4, peak=0.7,
                                              alpha=0.6, t=2, trials=3, seed=5)
        result = run_experiment(config)
        assert (result.records["achieved_tv"] == 0.0).all()
        assert result.records["factor"].isna().all()
        assert (result.records["rounds"] <= 2).all()

    def test_hs_naive(self):
        config = ExperimentConfig.from_params(command="hs", generator="peaked", k=4, N=4, peak=0.7,
                                              alpha=0.6, algo="naive", trials=2, seed=5)
        result = run_experiment(config)
        assert (result.records["rounds"] == 1).all()

    def test_trial_order_independence(self):
        """Un essai ne dépend que de (graine, commande, indice)."""
        params = dict(command="maxselect", k=25, t=2, values="random", algo="better", seed=7)
        small = run_experiment(ExperimentConfig.from_params(trials=3, **params)).records
        large = run_experiment(ExperimentConfig.from_params(trials=6, **params)).records
        pd.testing.assert_frame_equal(small, large.iloc[:3].reset_index(drop=True))

    @pytest.mark.slow
    def test_workers_match_sequential(self):
        params = dict(command="maxselect", k=25, t=2, values="random", algo="better", seed=7, trials=6)
        sequential = run_experiment(ExperimentConfig.from_params(workers=1, **params)).records
        parallel = run_experiment(ExperimentConfig.from_params(workers=2, **params)).records
        pd.testing.assert_frame_equal(sequential, parallel)


@pytest.mark.unit
class TestSummarize:
    """Tests pour summarize."""

    def test_columns(self):
        records = pd.DataFrame({
            "trial": [0, 1, 2, 3],
            "k": [5, 5, 5, 5],
            "t": [2, 2, 2, 2],
            "adversary": ["favor_lower"] * 4,
            "success": [1, 1, 0, 1],
            "queries": [10, 10, 10, 10],
            "rounds": [2, 2, 2, 2],
        })
        summary = summarize(records, "maxselect")
        assert len(summary) == 1
        assert summary.loc[0, "success_mean"] == pytest.approx(0.75)
        assert summary.loc[0, "success_count"] == 4
        assert summary.loc[0, "queries_q50"] == 10
        assert "rounds_q95" in summary.columns


@pytest.mark.integration
class TestLowerBoundGame:
    """Tests du jeu de borne inférieure."""

    def test_full_budget_one_round_finds_sink(self):
        result = run_lowerbound_game(k=12, t=1, budget=66, strategy="budgeted_multi_round", trials=10, seed=0)
        assert result.success_rate == 1.0

    def test_zero_budget_is_guessing(self):
        result = run_lowerbound_game(k=20, t=2, budget=0, strategy="budgeted_multi_round", trials=200, seed=0)
        assert result.success_rate <= 0.15
        assert (result.records["queries"] == 0).all()

    def test_exhausted_budget_guess_is_not_fixed(self):
        result = run_lowerbound_game(k=16, t=2, budget=0, strategy="budgeted_multi_round", trials=50, seed=3)
        assert result.records["guess"].nunique() > 1

    @pytest.mark.slow
    def test_large_k_budget_separation(self):
        """k = 4096, t = 2: k^{4/3}/100 requêtes ne suffisent pas, le budget complet si."""
        k, t, trials = 4096, 2, 200
        starved = run_lowerbound_game(k, t, int(k ** (4 / 3) / 100), "budgeted_multi_round", trials, seed=9)
        assert starved.success_rate <= 0.9
        full = run_lowerbound_game(k, t, math.comb(k, 2), "budgeted_multi_round", trials, seed=9)
        assert full.success_rate == 1.0

    def test_random_queries_respect_budget(self):
        result = run_lowerbound_game(k=20, t=2, budget=30, strategy="budgeted_random_queries", trials=20, seed=1)
        assert (result.records["queries"] <= 30).all()
        assert (result.records["rounds"] <= 2).all()

    def test_trial_record(self, rng):
        record = play_game_trial(16, 2, 40, "budgeted_multi_round", rng, trial=3)
        assert record["trial"] == 3
        assert record["queries"] <= 40
        assert record["sink_found"] in (0, 1)

    def test_unknown_strategy(self, rng):
        with pytest.raises(ConfigError):
            play_game_trial(16, 2, 40, "oracle_peek", rng)
        with pytest.raises(ConfigError):
            run_lowerbound_game(16, 2, 40, "oracle_peek", trials=1, seed=0)
