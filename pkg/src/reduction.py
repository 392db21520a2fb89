"""
Reduction Module
================

Sélection d'hypothèses localement privée et séquentiellement interactive:
les tournois de sélection du maximum sont pilotés par un comparateur dont
chaque requête consomme un groupe neuf d'utilisateurs et répond par un test
de Scheffé privé.

Classes:
    UserPopulation: Utilisateurs détenant chacun un échantillon de p, consommés au plus une fois
    RoundRecord: Comparaisons, utilisateurs et messages d'un tour
    Transcript: Transcription complète d'un essai (tours, registre, choix)
    ScheffeOracle: Comparateur adossé au test de Scheffé privé
    ComparisonBudget: Nombre de comparaisons, taille de groupe, utilisateurs requis
    AgnosticScore: Distance atteinte et facteur d'approximation réalisé
    CalibrationResult: Constante de comparaison calibrée
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .comparators import ComparatorOracle
from .distributions import Dist, HypothesisSet, min_tv_to_set, sample, tv_distance
from .exceptions import ConfigError, InsufficientSamplesError
from .mechanisms import PrivacyLedger, PrivacyParams
from .scheffe import FIRST, ScheffeWitness, ldp_scheffe, scheffe_set
from .selection import better_multi_round, better_multi_round_query_bound, round_robin

logger = logging.getLogger(__name__)

DEFAULT_COMPARISON_CONSTANT = 50.0
DEFAULT_GAMMA0 = 0.1
# constante de |H| du tournoi de la réduction (celle de selection vaut 100)
REDUCTION_H_CONSTANT = 2.0


class UserPopulation:
    """
    n utilisateurs, chacun détenant un échantillon de p.

    Les utilisateurs sont distribués dans l'ordre de consommation; aucun
    utilisateur n'est servi deux fois.
    """

    def __init__(self, samples):
        self.samples = np.asarray(samples, dtype=np.int64)
        self.samples.setflags(write=False)
        self._cursor = 0

    @classmethod
    def from_distribution(cls, p: Dist, n: int, rng: np.random.Generator) -> "UserPopulation":
        return cls(sample(p, rng, size=n))

    @property
    def n(self) -> int:
        return int(self.samples.size)

    @property
    def consumed(self) -> int:
        return self._cursor

    @property
    def remaining(self) -> int:
        return self.n - self._cursor

    def take(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Consomme `count` utilisateurs neufs.

        Returns:
            (identifiants, échantillons)

        Raises:
            InsufficientSamplesError: moins de `count` utilisateurs restants
        """
        if count > self.remaining:
            raise InsufficientSamplesError(requested=count, available=self.remaining)
        start, self._cursor = self._cursor, self._cursor + count
        return np.arange(start, self._cursor), self.samples[start:self._cursor]


@dataclass
class RoundRecord:
    """Un tour de protocole."""

    index: int
    comparisons: int = 0
    messages: int = 0
    user_chunks: List[np.ndarray] = field(default_factory=list)

    @property
    def user_ids(self) -> np.ndarray:
        if not self.user_chunks:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.user_chunks)


@dataclass
class Transcript:
    """Transcription d'un essai: tours, registre de confidentialité, hypothèse choisie."""

    rounds: List[RoundRecord] = field(default_factory=list)
    ledger: PrivacyLedger = field(default_factory=PrivacyLedger)
    chosen: Optional[int] = None

    def open_round(self) -> RoundRecord:
        record = RoundRecord(index=len(self.rounds))
        self.rounds.append(record)
        return record

    def record(self, user_ids, tag: str, epsilon: float, comparisons: int = 1) -> None:
        """Enregistre un lot de messages dans le tour courant et dans le registre."""
        if not self.rounds:
            self.open_round()
        current = self.rounds[-1]
        ids = np.atleast_1d(np.asarray(user_ids, dtype=np.int64))
        current.user_chunks.append(ids)
        current.messages += int(ids.size)
        current.comparisons += comparisons
        self.ledger.record(ids, current.index, tag, epsilon)

    @property
    def rounds_used(self) -> int:
        return sum(1 for r in self.rounds if r.messages > 0)

    @property
    def samples_used(self) -> int:
        return sum(r.messages for r in self.rounds)

    @property
    def comparisons(self) -> int:
        return sum(r.comparisons for r in self.rounds)

    def users_disjoint(self) -> bool:
        ids = np.concatenate([r.user_ids for r in self.rounds]) if self.rounds else np.zeros(0)
        return np.unique(ids).size == ids.size


class ScheffeOracle(ComparatorOracle):
    """
    Comparateur dont chaque requête consomme un groupe neuf de g utilisateurs
    et répond par ldp_scheffe(q_i, q_j). Le gagnant est l'hypothèse jugée la plus proche de p.
    """

    def __init__(
        self,
        hypotheses: HypothesisSet,
        population: UserPopulation,
        epsilon: float,
        group_size: int,
        rng: np.random.Generator,
        transcript: Optional[Transcript] = None,
    ):
        super().__init__(hypotheses.k)
        self.hypotheses = hypotheses
        self.population = population
        self.epsilon = epsilon
        self.group_size = group_size
        self.rng = rng
        self.transcript = transcript if transcript is not None else Transcript()
        self._witnesses: Dict[Tuple[int, int], ScheffeWitness] = {}

    def new_round(self) -> int:
        self.transcript.open_round()
        return super().new_round()

    def _witness(self, i: int, j: int) -> ScheffeWitness:
        if (i, j) not in self._witnesses:
            self._witnesses[(i, j)] = scheffe_set(self.hypotheses[i], self.hypotheses[j])
        return self._witnesses[(i, j)]

    def _answer(self, i: int, j: int) -> int:
        user_ids, samples = self.population.take(self.group_size)
        side = ldp_scheffe(
            samples, self.hypotheses[i], self.hypotheses[j], self.epsilon, self.rng, witness=self._witness(i, j)
        )
        self.transcript.record(user_ids, tag="randomized_response", epsilon=self.epsilon)
        return i if side == FIRST else j


@dataclass(frozen=True)
class ComparisonBudget:
    """m_total comparaisons au pire, g utilisateurs par comparaison, n_required = m_total·g."""

    m_total: int
    group_size: int
    n_required: int


def comparison_group_size(m_total: int, epsilon: float, alpha: float, beta_fail: float, constant: float) -> int:
    """g = ceil(C·log(m_total/β)/(ε²α²))."""
    if alpha <= 0 or not 0 < beta_fail < 1:
        raise ConfigError(f"Paramètres invalides alpha={alpha}, beta_fail={beta_fail}")
    PrivacyParams(epsilon)
    return max(1, math.ceil(constant * math.log(max(m_total, 1) / beta_fail) / (epsilon ** 2 * alpha ** 2)))


def comparison_budget(
    k: int,
    t: int,
    epsilon: float,
    alpha: float,
    beta_fail: float,
    constant: float = DEFAULT_COMPARISON_CONSTANT,
    h_constant: float = REDUCTION_H_CONSTANT,
) -> ComparisonBudget:
    """
    Budget de better_multi_round sous les règles d'arrondi implémentées.

    Args:
        k: Nombre d'hypothèses
        t: Nombre de tours
        epsilon: Paramètre de confidentialité
        alpha: Précision visée
        beta_fail: Probabilité d'échec tolérée
        constant: Constante C par comparaison
        h_constant: Constante de |H|
    """
    if t < 1 or k < 1:
        raise ConfigError(f"Paramètres invalides k={k}, t={t}")
    m_total = better_multi_round_query_bound(k, t, h_constant)
    group_size = comparison_group_size(m_total, epsilon, alpha, beta_fail, constant)
    return ComparisonBudget(m_total=m_total, group_size=group_size, n_required=m_total * group_size)


def hypothesis_select_ldp(
    hypotheses: HypothesisSet,
    population: UserPopulation,
    epsilon: float,
    alpha: float,
    beta_fail: float,
    t: int,
    rng: np.random.Generator,
    constant: float = DEFAULT_COMPARISON_CONSTANT,
    h_constant: float = REDUCTION_H_CONSTANT,
) -> Tuple[Dist, Transcript]:
    """
    Sélection d'hypothèses LDP en au plus t tours.

    better_multi_round sur les indices de Q avec un ScheffeOracle; chaque
    utilisateur envoie exactement un message ε-LDP.

    Returns:
        (hypothèse choisie, transcription)

    Raises:
        InsufficientSamplesError: population épuisée en cours de protocole
    """
    budget = comparison_budget(hypotheses.k, t, epsilon, alpha, beta_fail, constant, h_constant)
    if population.remaining < budget.n_required:
        logger.warning(
            f"[HS] Population ({population.remaining}) inférieure au pire cas planifié ({budget.n_required})"
        )
    transcript = Transcript()
    oracle = ScheffeOracle(hypotheses, population, epsilon, budget.group_size, rng, transcript)
    try:
        result = better_multi_round(range(hypotheses.k), t, oracle, rng, h_constant=h_constant)
    except InsufficientSamplesError as e:
        logger.error(f"[HS] Protocole interrompu après {transcript.comparisons} comparaisons: {e}")
        raise
    transcript.chosen = result.winner
    logger.debug(
        f"[HS] k={hypotheses.k}, t={t}: gagnant {result.winner} en {result.rounds_used} tours, "
        f"{transcript.samples_used} utilisateurs"
    )
    return hypotheses[result.winner], transcript


def naive_k2_baseline(
    hypotheses: HypothesisSet,
    population: UserPopulation,
    epsilon: float,
    alpha: float,
    rng: np.random.Generator,
    beta_fail: float = 0.1,
    constant: float = DEFAULT_COMPARISON_CONSTANT,
) -> Tuple[Dist, Transcript]:
    """
    Référence non interactive: les C(k,2) tests de Scheffé privés en un tour sur
    des groupes disjoints; le plus grand nombre de victoires l'emporte.
    """
    k = hypotheses.k
    m_total = k * (k - 1) // 2
    group_size = comparison_group_size(m_total, epsilon, alpha, beta_fail, constant)
    transcript = Transcript()
    oracle = ScheffeOracle(hypotheses, population, epsilon, group_size, rng, transcript)
    result = round_robin(list(range(k)), oracle)
    transcript.chosen = result.winner
    return hypotheses[result.winner], transcript


@dataclass(frozen=True)
class AgnosticScore:
    """Distance atteinte d_TV(p, q̂), beta = min_q d_TV(p, q) et facteur (atteint − α)/β."""

    achieved: float
    beta: float
    factor: Optional[float]

    @property
    def exact_case(self) -> bool:
        return self.factor is None


def agnostic_score(chosen: Dist, p: Dist, hypotheses: HypothesisSet, alpha: float = 0.0) -> AgnosticScore:
    """Score agnostique; facteur None quand beta = 0 (cas exact)."""
    achieved = tv_distance(p, chosen)
    beta, _ = min_tv_to_set(p, hypotheses)
    factor = (achieved - alpha) / beta if beta > 0 else None
    return AgnosticScore(achieved=achieved, beta=beta, factor=factor)


def value_map(p: Dist, hypotheses: HypothesisSet, gamma0: float = DEFAULT_GAMMA0) -> np.ndarray:
    """
    Valeurs x_i = −log_{3+γ0} d_TV(p, q_i), réservées à la simulation (p connu).

    x_i = +inf quand q_i = p.
    """
    distances = 0.5 * np.abs(hypotheses.matrix - p.weights[None, :]).sum(axis=1)
    with np.errstate(divide="ignore"):
        return -np.log(distances) / np.log(3.0 + gamma0)


@dataclass(frozen=True)
class CalibrationResult:
    """Constante C retenue, taux de succès mesuré et taille de groupe associée."""

    constant: float
    success_rate: float
    group_size: int


def _comparison_success(
    hypotheses: HypothesisSet,
    p: Dist,
    pairs: List[Tuple[int, int]],
    group_size: int,
    epsilon: float,
    trials: int,
    seed_sequence: np.random.SeedSequence,
) -> float:
    wins, total = 0, 0
    for child in seed_sequence.spawn(trials):
        rng = np.random.default_rng(child)
        for best, other in pairs:
            samples = sample(p, rng, size=group_size)
            wins += ldp_scheffe(samples, hypotheses[best], hypotheses[other], epsilon, rng) == FIRST
            total += 1
    return wins / total


def calibrate_comparison_constant(
    hypotheses: HypothesisSet,
    p: Dist,
    epsilon: float,
    alpha: float,
    beta_fail: float,
    seed: int,
    trials: int = 200,
    bounds: Tuple[float, float] = (0.1, 200.0),
    iterations: int = 8,
    gamma0: float = DEFAULT_GAMMA0,
) -> CalibrationResult:
    """
    Bissection (en échelle logarithmique) sur la constante C d'une comparaison.

    Chaque candidat est évalué sur des graines réservées: l'hypothèse la plus
    proche de p affronte chaque hypothèse à plus d'une unité de valeur en
    dessous (toutes les autres à défaut). La plus petite constante atteignant
    1 − beta_fail est retenue.
    """
    if hypotheses.k < 2:
        raise ConfigError("La calibration requiert au moins deux hypothèses")
    values = value_map(p, hypotheses, gamma0)
    best = int(np.argmax(values))
    others = [j for j in range(hypotheses.k) if j != best]
    pairs = [(best, j) for j in others if values[best] - values[j] > 1] or [(best, j) for j in others]

    target = 1.0 - beta_fail
    low, high = np.log(bounds[0]), np.log(bounds[1])

    def evaluate(log_constant: float) -> Tuple[float, int]:
        # mêmes graines réservées pour chaque candidat
        held_out = np.random.SeedSequence([seed, 0xCA1B])
        group_size = comparison_group_size(1, epsilon, alpha, beta_fail, float(np.exp(log_constant)))
        return _comparison_success(hypotheses, p, pairs, group_size, epsilon, trials, held_out), group_size

    rate, group_size = evaluate(high)
    best_result = CalibrationResult(constant=float(np.exp(high)), success_rate=rate, group_size=group_size)
    if rate < target:
        logger.warning(f"[CALIBRATE] Taux {rate:.3f} < {target:.3f} même à C={bounds[1]}")
        return best_result

    for _ in range(iterations):
        middle = 0.5 * (low + high)
        rate, group_size = evaluate(middle)
        logger.debug(f"[CALIBRATE] C={np.exp(middle):.3f}: g={group_size}, succès {rate:.3f}")
        if rate >= target:
            high = middle
            best_result = CalibrationResult(constant=float(np.exp(middle)), success_rate=rate, group_size=group_size)
        else:
            low = middle
    logger.info(f"[CALIBRATE] C={best_result.constant:.3f} (g={best_result.group_size}, succès {best_result.success_rate:.3f})")
    return best_result
