"""
Comparators Module
==================

Contrat des oracles de comparaison adversariaux et adversaires concrets,
dont la construction en couches (k, t) utilisée dans le jeu de borne inférieure.

Un oracle répond à query(i, j) par l'identifiant du gagnant. Il est véridique
dès que |x_i − x_j| > 1 et libre (politique adversariale) sinon. Les
identifiants sont les indices 0..k−1; la valeur cachée de l'item i est values[i].

Classes:
    ComparatorOracle: Contrat abstrait avec comptage des requêtes et des tours
    GapComparator: Oracle à valeurs, politique d'égalité configurable
    LayeredTournament: Tournoi en couches V_0..V_t avec puits unique i*
    TournamentOracle: Oracle répondant selon les arêtes d'un tournoi
    BudgetedOracle: Enveloppe plafonnant le nombre total de requêtes
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import ConfigError, InfeasibleInstanceError, InvalidDistributionError

logger = logging.getLogger(__name__)

TIE_POLICIES = ("favor_lower", "favor_higher", "uniform_random", "greedy_adaptive")
TRUTHFUL_GAP = 1.0


class ComparatorOracle(ABC):
    """
    Oracle de comparaison avec comptabilité exacte.

    queries_per_round[r] compte les requêtes du tour r; un tour commence à
    chaque appel de new_round() (le premier query() en ouvre un si besoin).
    """

    def __init__(self, k: int):
        self.k = k
        self.queries_total = 0
        self.queries_per_round: List[int] = []

    def new_round(self) -> int:
        """Signale une frontière de tour; renvoie l'indice du nouveau tour."""
        self.queries_per_round.append(0)
        return len(self.queries_per_round) - 1

    @property
    def rounds_started(self) -> int:
        return len(self.queries_per_round)

    def _check_ids(self, i: int, j: int) -> None:
        if not (0 <= i < self.k and 0 <= j < self.k):
            raise InvalidDistributionError(f"Identifiant inconnu dans la requête ({i}, {j}), k={self.k}")
        if i == j:
            raise InvalidDistributionError(f"Comparaison d'un item avec lui-même: {i}")

    def query(self, i: int, j: int) -> int:
        """Compare les items i et j et renvoie l'identifiant du gagnant."""
        self._check_ids(i, j)
        if not self.queries_per_round:
            self.new_round()
        winner = self._answer(int(i), int(j))
        self.queries_total += 1
        self.queries_per_round[-1] += 1
        return winner

    @abstractmethod
    def _answer(self, i: int, j: int) -> int:
        """Réponse brute de l'adversaire, sans comptabilité."""


class GapComparator(ComparatorOracle):
    """
    Oracle à valeurs: véridique si l'écart dépasse 1, politique d'égalité sinon.

    Politiques:
        favor_lower: l'item de plus petite valeur gagne
        favor_higher: l'item de plus grande valeur gagne
        uniform_random: orientations tirées à la construction, stables
        greedy_adaptive: l'item ayant le plus perdu jusqu'ici gagne; réponses mémorisées
    """

    def __init__(self, values, policy: str = "uniform_random", rng: Optional[np.random.Generator] = None):
        values = np.asarray(values, dtype=float)
        super().__init__(values.size)
        if policy not in TIE_POLICIES:
            raise ConfigError(f"Politique d'égalité inconnue: {policy} (attendu: {TIE_POLICIES})")
        self.values = values
        self.policy = policy
        self._orientation = None
        self._losses = np.zeros(self.k, dtype=np.int64)
        self._memo = {}
        if policy == "uniform_random":
            if rng is None:
                raise ConfigError("La politique uniform_random requiert un générateur")
            # orientation[i, j] (i < j) vaut 1 si i gagne l'égalité
            self._orientation = rng.integers(0, 2, size=(self.k, self.k), dtype=np.uint8)

    def _answer(self, i: int, j: int) -> int:
        vi, vj = self.values[i], self.values[j]
        if abs(vi - vj) > TRUTHFUL_GAP:
            winner = i if vi > vj else j
        else:
            winner = self._break_tie(i, j)
        if self.policy == "greedy_adaptive":
            self._losses[j if winner == i else i] += 1
        return winner

    def _break_tie(self, i: int, j: int) -> int:
        low, high = (i, j) if i < j else (j, i)
        if self.policy == "uniform_random":
            return low if self._orientation[low, high] else high
        if self.policy in ("favor_lower", "favor_higher"):
            vl, vh = self.values[low], self.values[high]
            if vl == vh:
                return low
            lower_valued = low if vl < vh else high
            higher_valued = high if lower_valued == low else low
            return lower_valued if self.policy == "favor_lower" else higher_valued
        return self._greedy(low, high)

    def _greedy(self, low: int, high: int) -> int:
        key = (low, high)
        if key in self._memo:
            return self._memo[key]
        losses_low, losses_high = self._losses[low], self._losses[high]
        if losses_low != losses_high:
            winner = low if losses_low > losses_high else high
        elif self.values[low] != self.values[high]:
            winner = low if self.values[low] < self.values[high] else high
        else:
            winner = low
        self._memo[key] = winner
        return winner


def gap_comparator(values, tie_policy: str, rng: Optional[np.random.Generator] = None) -> GapComparator:
    """Oracle à valeurs avec la politique d'égalité demandée."""
    return GapComparator(values, tie_policy, rng)


@dataclass(frozen=True, eq=False)
class LayeredTournament:
    """
    Construction (k, t): couches V_0..V_t, V_q = U_q \\ U_{q+1}, U_t = {i*, i'}.

    wins[i, j] vaut True si i bat j (l'arête pointe vers le gagnant).
    """

    k: int
    t: int
    layer: np.ndarray
    subset_sizes: tuple
    wins: np.ndarray
    sink: int
    runner_up: int

    def beats(self, i: int, j: int) -> bool:
        return bool(self.wins[i, j])


def layer_subset_sizes(k: int, t: int) -> List[int]:
    """
    Tailles |U_0|, …, |U_t| avec |U_q| = round(k^{(2^t − 2^q)/(2^t − 1)}) et |U_t| = 2.

    Une passe de réparation force la décroissance stricte jusqu'à U_{t−1}.

    Raises:
        InfeasibleInstanceError: k trop petit pour t
    """
    if k < 4:
        raise InfeasibleInstanceError(f"k={k} < 4: construction en couches impossible")
    if t < 1:
        raise InfeasibleInstanceError(f"t={t} < 1")
    denominator = 2 ** t - 1
    sizes = [k]
    for q in range(1, t):
        sizes.append(int(round(k ** ((2 ** t - 2 ** q) / denominator))))
    for q in range(1, t):
        sizes[q] = min(sizes[q], sizes[q - 1] - 1)
    if t >= 2 and sizes[t - 1] < 2:
        raise InfeasibleInstanceError(f"k={k} trop petit pour t={t}: tailles {sizes}")
    sizes.append(2)
    return sizes


def build_layered_tournament(k: int, t: int, rng: np.random.Generator) -> LayeredTournament:
    """
    Tire une construction (k, t).

    Les U_q sont emboîtés et tirés uniformément; le puits i* est tiré
    uniformément dans la paire finale. Arêtes inter-couches vers la couche
    la plus haute, intra-couche par pile ou face, i' → i*.
    """
    sizes = layer_subset_sizes(k, t)
    layer = np.zeros(k, dtype=np.int64)
    current = np.arange(k)
    for q in range(1, t + 1):
        current = rng.choice(current, size=sizes[q], replace=False)
        layer[current] = q
    pair = np.sort(current)
    sink_position = int(rng.integers(2))
    sink, runner_up = int(pair[sink_position]), int(pair[1 - sink_position])

    wins = layer[:, None] > layer[None, :]
    coins = rng.integers(0, 2, size=(k, k), dtype=np.uint8).astype(bool)
    upper = np.triu(coins, 1)
    same_layer = layer[:, None] == layer[None, :]
    wins |= same_layer & (upper | np.triu(~coins, 1).T)
    wins[sink, runner_up] = True
    wins[runner_up, sink] = False
    np.fill_diagonal(wins, False)
    wins.setflags(write=False)

    logger.debug(f"[GAME] Construction (k={k}, t={t}): |U_q| = {sizes}, i*={sink}, i'={runner_up}")
    return LayeredTournament(
        k=k, t=t, layer=layer, subset_sizes=tuple(sizes), wins=wins, sink=sink, runner_up=runner_up
    )


def sink_of(graph: LayeredTournament) -> int:
    """Unique nœud de degré entrant k − 1 (il bat tous les autres)."""
    candidates = np.flatnonzero(graph.wins.sum(axis=1) == graph.k - 1)
    return int(candidates[0])


def item_values(graph: LayeredTournament, tau: float = 1.0) -> np.ndarray:
    """
    Valeurs par composantes fortement connexes: x_j = 2·i·τ pour x_j ∈ C_i.

    Dans un tournoi, la condensation est un ordre total; C_0 est la
    composante la plus basse et celle du puits la plus haute.
    """
    n_components, labels = connected_components(csr_matrix(graph.wins), directed=True, connection="strong")
    out_degree = graph.wins.sum(axis=1)
    component_degree = np.bincount(labels, weights=out_degree, minlength=n_components) / np.bincount(
        labels, minlength=n_components
    )
    rank = np.empty(n_components, dtype=np.int64)
    rank[np.argsort(component_degree, kind="stable")] = np.arange(n_components)
    return 2.0 * rank[labels] * tau


class TournamentOracle(ComparatorOracle):
    """Adversaire non adaptatif répondant selon les arêtes du tournoi."""

    def __init__(self, graph: LayeredTournament, tau: float = 1.0):
        super().__init__(graph.k)
        self.graph = graph
        self.tau = tau

    @cached_property
    def values(self) -> np.ndarray:
        return item_values(self.graph, self.tau)

    def _answer(self, i: int, j: int) -> int:
        return i if self.graph.wins[i, j] else j


def tournament_oracle(graph: LayeredTournament, tau: float = 1.0) -> TournamentOracle:
    return TournamentOracle(graph, tau)


class BudgetedOracle(ComparatorOracle):
    """
    Enveloppe d'un oracle avec un plafond de requêtes.

    Une fois le budget épuisé, query() renvoie None sans consulter l'oracle
    interne. beaten marque les items ayant perdu au moins une requête servie.
    """

    def __init__(self, inner: ComparatorOracle, budget: int):
        super().__init__(inner.k)
        self.inner = inner
        self.budget = int(budget)
        self.refused = 0
        self.beaten = np.zeros(inner.k, dtype=bool)

    @property
    def exhausted(self) -> bool:
        return self.queries_total >= self.budget

    def new_round(self) -> int:
        self.inner.new_round()
        return super().new_round()

    def query(self, i: int, j: int) -> Optional[int]:
        if self.exhausted:
            self.refused += 1
            return None
        winner = super().query(i, j)
        self.beaten[j if winner == i else i] = True
        return winner

    def unbeaten(self) -> np.ndarray:
        return np.flatnonzero(~self.beaten)

    def _answer(self, i: int, j: int) -> int:
        return self.inner.query(i, j)
