"""
Harness Module
==============

Banc d'expériences: configuration résolue d'une exécution, flux aléatoires
dérivés par essai, exécution séquentielle ou sur un pool de processus,
synthèse statistique et jeu de borne inférieure contre la construction (k, t).

Classes:
    ExperimentConfig: Paramètres validés d'une exécution (pydantic)
    ExperimentResult: Enregistrements par essai et tableau de synthèse
    GameResult: Taux de succès et enregistrements du jeu de borne inférieure
"""

import logging
import math
import zlib
from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .comparators import (
    BudgetedOracle,
    ComparatorOracle,
    TIE_POLICIES,
    build_layered_tournament,
    gap_comparator,
    sink_of,
    tournament_oracle,
)
from .distributions import (
    Dist,
    HypothesisSet,
    InstanceMeta,
    gen_agnostic_instance,
    gen_hard_instance,
    gen_peaked_instance,
    gen_random_separated,
    min_tv_to_set,
    sample,
)
from .exceptions import ConfigError
from .noninteractive import run_noninteractive
from .reduction import (
    UserPopulation,
    agnostic_score,
    comparison_budget,
    comparison_group_size,
    hypothesis_select_ldp,
    naive_k2_baseline,
)
from .selection import better_multi_round, knockout, multi_round, round_robin, two_round
from .storage import RECORD_COLUMNS, load_instance

logger = logging.getLogger(__name__)

COMMANDS = ("ni", "hs", "maxselect", "game")
GENERATORS = ("random", "hard", "peaked", "agnostic")
ALGORITHMS = ("round_robin", "two_round", "multi_round", "better", "knockout", "naive")
STRATEGIES = ("budgeted_multi_round", "budgeted_random_queries")
ADVERSARIES = TIE_POLICIES + ("tournament",)

SUMMARY_KEYS = {
    "ni": ["n"],
    "hs": ["algo"],
    "maxselect": ["k", "t", "adversary"],
    "game": ["k", "t", "budget", "strategy"],
}
SUMMARY_METRICS = {
    "ni": ["success", "L"],
    "hs": ["achieved_tv", "factor", "n_used", "rounds"],
    "maxselect": ["success", "queries", "rounds"],
    "game": ["sink_found", "queries", "rounds"],
}
QUANTILES = (0.05, 0.5, 0.95)


class ExperimentConfig(BaseModel):
    """Paramètres résolus d'une exécution (drapeaux CLI fusionnés avec config.json)."""

    command: Literal["ni", "hs", "maxselect", "game"]
    instance: Optional[str] = None
    generator: Literal["random", "hard", "peaked", "agnostic"] = "random"
    k: int = Field(default=8, ge=1)
    N: int = Field(default=16, ge=1)
    d: int = Field(default=3, ge=1)
    separation: float = Field(default=0.3, ge=0, le=1)
    beta: float = Field(default=0.0, ge=0, lt=1)
    peak: float = Field(default=0.6, gt=0, lt=1)
    epsilon: float = Field(default=1.0, gt=0, le=10)
    noise_mode: Literal["strict", "paper", "nominal"] = "strict"
    alpha: float = Field(default=0.15, gt=0, le=1)
    n: Optional[int] = Field(default=None, ge=1)
    n_sweep: List[int] = Field(default_factory=list)
    t: int = Field(default=3, ge=1)
    trials: int = Field(default=100, ge=1)
    seed: int = 0
    adversary: Literal["favor_lower", "favor_higher", "uniform_random", "greedy_adaptive", "tournament"] = "uniform_random"
    values: Literal["spaced", "random", "clustered"] = "spaced"
    algo: Literal["round_robin", "two_round", "multi_round", "better", "knockout", "naive"] = "better"
    h_constant: float = Field(default=100.0, gt=0)
    reduction_h_constant: float = Field(default=2.0, gt=0)
    comparison_constant: float = Field(default=50.0, gt=0)
    beta_fail: float = Field(default=0.1, gt=0, lt=1)
    budget: Optional[int] = Field(default=None, ge=0)
    strategy: Literal["budgeted_multi_round", "budgeted_random_queries"] = "budgeted_multi_round"
    workers: int = Field(default=1, ge=1)
    out: Optional[str] = None
    output_format: Literal["csv", "json"] = "csv"
    report: bool = False

    @field_validator("n_sweep")
    @classmethod
    def check_sweep(cls, value: List[int]) -> List[int]:
        if any(n < 1 for n in value):
            raise ValueError("toutes les valeurs de n_sweep doivent être ≥ 1")
        return value

    @model_validator(mode="after")
    def check_command(self):
        if self.command == "maxselect" and self.algo == "naive":
            raise ValueError("l'algorithme naive n'existe que pour hs")
        if self.command == "hs" and self.algo not in ("better", "naive"):
            raise ValueError("hs accepte --algo better ou naive")
        return self

    @classmethod
    def from_params(cls, **params) -> "ExperimentConfig":
        """Construit la configuration; les erreurs de validation deviennent des ConfigError."""
        try:
            return cls(**{key: value for key, value in params.items() if value is not None})
        except ValidationError as e:
            raise ConfigError(f"Configuration d'expérience invalide: {e}") from e

    def sweep_points(self) -> List[Optional[int]]:
        if self.n_sweep:
            return list(self.n_sweep)
        return [self.n]


@dataclass
class ExperimentResult:
    """Enregistrements par essai et synthèse par groupe."""

    records: pd.DataFrame
    summary: pd.DataFrame

    def record_dicts(self) -> List[Dict[str, Any]]:
        return self.records.to_dict(orient="records")


@dataclass
class GameResult:
    """Taux de découverte du puits et enregistrements par essai."""

    success_rate: float
    records: pd.DataFrame


def derive_rng(seed: int, label: str, trial: int) -> np.random.Generator:
    """Flux enfant indépendant pour (graine maîtresse, étiquette, essai)."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(label.encode("utf-8")), trial]))


def prepare_instance(config: ExperimentConfig) -> Tuple[HypothesisSet, Dist, InstanceMeta]:
    """
    Charge ou génère l'instance; renvoie (Q, p, métadonnées).

    p vaut q_{true_index} pour les instances exactes, la distribution
    générée ou fournie pour les instances agnostiques.
    """
    if config.instance:
        hypotheses, p, meta = load_instance(config.instance)
        if p is None:
            p = hypotheses[0]
            meta = InstanceMeta(true_index=0, separation=meta.separation)
        return hypotheses, p, meta

    rng = derive_rng(config.seed, "instance", 0)
    if config.generator == "hard":
        hypotheses, meta = gen_hard_instance(config.d, config.separation)
    elif config.generator == "peaked":
        hypotheses, meta = gen_peaked_instance(config.k, config.N, config.peak)
    elif config.generator == "agnostic":
        hypotheses, p, meta = gen_agnostic_instance(config.k, config.N, config.separation, config.beta, rng)
        return hypotheses, p, meta
    else:
        hypotheses, meta = gen_random_separated(config.k, config.N, config.separation, rng)
    true_index = int(rng.integers(hypotheses.k))
    meta = InstanceMeta(true_index=true_index, separation=meta.separation, beta=0.0, extra=meta.extra)
    return hypotheses, hypotheses[true_index], meta


def generate_values(kind: str, k: int, rng: np.random.Generator) -> np.ndarray:
    """
    Valeurs cachées des items.

    spaced: permutation de 0, 2, 4, … (aucune égalité)
    random: uniformes sur [0, k/4]
    clustered: ceil(√k) items dans [M − 1, M] au-dessus d'items espacés de 2
    """
    if kind == "spaced":
        return rng.permutation(2.0 * np.arange(k))
    if kind == "random":
        return rng.uniform(0.0, k / 4.0, size=k)
    if kind == "clustered":
        cluster = min(k, math.ceil(math.sqrt(k)))
        base = 2.0 * np.arange(k - cluster)
        top = 2.0 * (k - cluster) + 1.0
        values = np.concatenate([base, rng.uniform(top - 1.0, top, size=cluster)])
        return rng.permutation(values)
    raise ConfigError(f"Générateur de valeurs inconnu: {kind}")


def approximation_bound(algo: str, k: int, t: int) -> float:
    """Écart toléré au maximum pour compter un essai comme réussi."""
    bounds = {
        "round_robin": 2.0,
        "two_round": 4.0,
        "multi_round": 2.0 * t,
        "better": 3.0,
        "knockout": float(math.ceil(math.log2(max(k, 2)))),
    }
    return bounds[algo]


def run_selection(algo: str, items: Sequence[int], t: int, oracle: ComparatorOracle, rng, h_constant: float):
    if algo == "round_robin":
        return round_robin(items, oracle)
    if algo == "two_round":
        return two_round(items, oracle)
    if algo == "multi_round":
        return multi_round(items, t, oracle)
    if algo == "knockout":
        return knockout(items, oracle)
    return better_multi_round(items, t, oracle, rng, h_constant=h_constant)


def _ni_trial(config: ExperimentConfig, instance, n: int, trial: int) -> Dict[str, Any]:
    hypotheses, p, meta = instance
    rng = derive_rng(config.seed, config.command, trial)
    samples = sample(p, rng, size=n)
    result = run_noninteractive(hypotheses, samples, config.epsilon, config.noise_mode, rng)
    result.transcript.ledger.assert_budget(config.epsilon)
    target = meta.true_index if meta.true_index is not None else min_tv_to_set(p, hypotheses)[1]
    return {
        "trial": trial,
        "n": n,
        "chosen": result.chosen_index,
        "true": target,
        "success": int(result.chosen_index == target),
        "L": result.L,
        "Nprime": result.target_size,
    }


def _hs_trial(config: ExperimentConfig, instance, n: Optional[int], trial: int) -> Dict[str, Any]:
    hypotheses, p, _ = instance
    rng = derive_rng(config.seed, config.command, trial)
    population = UserPopulation.from_distribution(p, n, rng)
    if config.algo == "naive":
        chosen, transcript = naive_k2_baseline(
            hypotheses, population, config.epsilon, config.alpha, rng,
            beta_fail=config.beta_fail, constant=config.comparison_constant,
        )
    else:
        chosen, transcript = hypothesis_select_ldp(
            hypotheses, population, config.epsilon, config.alpha, config.beta_fail, config.t, rng,
            constant=config.comparison_constant, h_constant=config.reduction_h_constant,
        )
    transcript.ledger.assert_budget(config.epsilon)
    score = agnostic_score(chosen, p, hypotheses, config.alpha)
    return {
        "trial": trial,
        "n_used": transcript.samples_used,
        "rounds": transcript.rounds_used,
        "chosen": transcript.chosen,
        "achieved_tv": score.achieved,
        "beta": score.beta,
        "factor": score.factor if score.factor is not None else float("nan"),
        "algo": config.algo,
    }


def _maxselect_trial(config: ExperimentConfig, instance, n, trial: int) -> Dict[str, Any]:
    rng = derive_rng(config.seed, config.command, trial)
    if config.adversary == "tournament":
        graph = build_layered_tournament(config.k, config.t, rng)
        oracle = tournament_oracle(graph)
        values = oracle.values
    else:
        values = generate_values(config.values, config.k, rng)
        oracle = gap_comparator(values, config.adversary, rng)
    result = run_selection(config.algo, range(config.k), config.t, oracle, rng, config.h_constant)
    winner_value, max_value = float(values[result.winner]), float(values.max())
    return {
        "trial": trial,
        "k": config.k,
        "t": config.t,
        "adversary": config.adversary,
        "winner": result.winner,
        "winner_value": winner_value,
        "max_value": max_value,
        "queries": result.queries_total,
        "rounds": result.rounds_used,
        "success": int(winner_value >= max_value - approximation_bound(config.algo, config.k, config.t)),
    }


def _game_trial(config: ExperimentConfig, instance, n, trial: int) -> Dict[str, Any]:
    rng = derive_rng(config.seed, config.command, trial)
    budget = config.budget if config.budget is not None else config.k * (config.k - 1) // 2
    return play_game_trial(config.k, config.t, budget, config.strategy, rng, trial)


TRIAL_FUNCTIONS: Dict[str, Callable] = {
    "ni": _ni_trial,
    "hs": _hs_trial,
    "maxselect": _maxselect_trial,
    "game": _game_trial,
}


def _resolve_n(config: ExperimentConfig, hypotheses: HypothesisSet, n: Optional[int]) -> Optional[int]:
    if config.command == "ni":
        if n is None:
            raise ConfigError("ni requiert --n ou --n-sweep")
        return n
    if config.command == "hs" and n is None:
        if config.algo == "naive":
            m_total = hypotheses.k * (hypotheses.k - 1) // 2
            group_size = comparison_group_size(m_total, config.epsilon, config.alpha, config.beta_fail,
                                               config.comparison_constant)
            return max(m_total, 1) * group_size
        return comparison_budget(hypotheses.k, config.t, config.epsilon, config.alpha, config.beta_fail,
                                 config.comparison_constant, config.reduction_h_constant).n_required
    return n


def _run_trials(function: Callable, trials: int, workers: int) -> List[Dict[str, Any]]:
    """Exécute les essais (pool de processus si workers > 1), triés par indice."""
    if workers > 1:
        with Pool(processes=workers) as pool:
            records = pool.map(function, range(trials))
    else:
        records = []
        step = max(1, trials // 10)
        for trial in range(trials):
            records.append(function(trial))
            if (trial + 1) % step == 0:
                logger.info(f"[RUN] Progression: {trial + 1}/{trials} essais ({100 * (trial + 1) // trials}%)")
    return sorted(records, key=lambda record: record["trial"])


def summarize(records: pd.DataFrame, command: str) -> pd.DataFrame:
    """
    Synthèse par groupe: moyenne, erreur standard et quantiles 5/50/95 % de chaque métrique.

    Une ligne par groupe; colonnes {métrique}_{statistique}.
    """
    keys = [key for key in SUMMARY_KEYS[command] if key in records.columns]
    metrics = [metric for metric in SUMMARY_METRICS[command] if metric in records.columns]
    frame = records.copy()
    if not keys:
        frame["group"] = "all"
        keys = ["group"]

    def quantile(q):
        def compute(series):
            return series.quantile(q)
        compute.__name__ = f"q{int(round(q * 100)):02d}"
        return compute

    aggregations = ["count", "mean", "sem"] + [quantile(q) for q in QUANTILES]
    summary = frame.groupby(keys, sort=True)[metrics].agg(aggregations)
    summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
    return summary.reset_index()


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """
    Exécute config.trials essais indépendants (par point de balayage de n).

    Chaque essai tire son flux de (graine, commande, essai): permuter l'ordre
    des essais ne change aucun enregistrement.
    """
    instance = prepare_instance(config) if config.command in ("ni", "hs") else None
    function = TRIAL_FUNCTIONS[config.command]
    logger.info(f"[RUN] Commande {config.command}: {config.trials} essais, graine {config.seed}")

    all_records: List[Dict[str, Any]] = []
    for point in config.sweep_points():
        n = _resolve_n(config, instance[0], point) if instance is not None else point
        if n is not None:
            logger.info(f"[RUN] n = {n}")
        trial_function = partial(function, config, instance, n)
        all_records.extend(_run_trials(trial_function, config.trials, config.workers))

    records = pd.DataFrame(all_records)
    summary = summarize(records, config.command)
    logger.info(f"[OK] {len(records)} enregistrements, {len(summary)} lignes de synthèse")
    return ExperimentResult(records=records, summary=summary)


def output_columns(config: ExperimentConfig) -> List[str]:
    return RECORD_COLUMNS[config.command]


def _random_queries_guess(oracle: BudgetedOracle, t: int, budget: int, rng: np.random.Generator) -> int:
    """Dépense budget/t requêtes aléatoires par tour entre nœuds invaincus; devine parmi eux."""
    per_round = [budget // t + (1 if r < budget % t else 0) for r in range(t)]
    for quota in per_round:
        candidates = oracle.unbeaten()
        if candidates.size < 2 or quota == 0:
            break
        oracle.new_round()
        first = rng.integers(candidates.size, size=quota)
        second = rng.integers(candidates.size - 1, size=quota)
        second += second >= first
        for a, b in zip(candidates[first], candidates[second]):
            if oracle.query(int(a), int(b)) is None:
                break
    return int(rng.choice(oracle.unbeaten()))


def play_game_trial(k: int, t: int, budget: int, strategy: str, rng: np.random.Generator, trial: int = 0) -> Dict[str, Any]:
    """Un essai du jeu: une construction (k, t) neuve, une stratégie, une devinette."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"Stratégie inconnue: {strategy} (attendu: {STRATEGIES})")
    graph = build_layered_tournament(k, t, rng)
    oracle = BudgetedOracle(tournament_oracle(graph), budget)
    if strategy == "budgeted_multi_round":
        permuted = rng.permutation(k).tolist()
        guess = multi_round(permuted, t, oracle).winner
        if oracle.refused:
            # budget épuisé: devinette uniforme parmi les nœuds invaincus
            guess = int(rng.choice(oracle.unbeaten()))
    else:
        guess = _random_queries_guess(oracle, t, budget, rng)
    sink = sink_of(graph)
    return {
        "trial": trial,
        "k": k,
        "t": t,
        "budget": budget,
        "strategy": strategy,
        "guess": guess,
        "sink": sink,
        "queries": oracle.queries_total,
        "rounds": sum(1 for q in oracle.queries_per_round if q > 0),
        "sink_found": int(guess == sink),
    }


def run_lowerbound_game(
    k: int,
    t: int,
    budget: int,
    strategy: str,
    trials: int,
    seed: int,
    workers: int = 1,
) -> GameResult:
    """
    Joue la stratégie contre des constructions (k, t) neuves.

    Returns:
        GameResult avec la fraction d'essais où la devinette est le puits i*
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"Stratégie inconnue: {strategy} (attendu: {STRATEGIES})")
    config = ExperimentConfig.from_params(command="game", k=k, t=t, budget=budget, strategy=strategy,
                                          trials=trials, seed=seed, workers=workers)
    logger.info(f"[GAME] k={k}, t={t}, budget={budget}, stratégie {strategy}, {trials} essais")
    records = pd.DataFrame(_run_trials(partial(_game_trial, config, None, None), trials, workers))
    rate = float(records["sink_found"].mean())
    logger.info(f"[GAME] Puits trouvé dans {rate:.1%} des essais")
    return GameResult(success_rate=rate, records=records)
