"""
Selection Module
================

Algorithmes de sélection approchée du maximum face à un comparateur
adversarial, avec comptabilité exacte des tours et des requêtes.

Classes:
    SelectionResult: Gagnant, requêtes par tour, survivants L et échantillon H
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .comparators import ComparatorOracle
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

INTEGER_SNAP = 1e-9
DEFAULT_H_CONSTANT = 100.0


@dataclass
class SelectionResult:
    """Résultat d'un tournoi; rounds_used = len(queries_per_round)."""

    winner: int
    queries_per_round: List[int] = field(default_factory=list)
    survivors: Tuple[int, ...] = ()
    sampled_set: Tuple[int, ...] = ()

    @property
    def queries_total(self) -> int:
        return int(sum(self.queries_per_round))

    @property
    def rounds_used(self) -> int:
        return len(self.queries_per_round)


def snapped_power(base: float, exponent: float, scale: float = 1.0) -> int:
    """ceil(scale·base^exponent), en ramenant à l'entier les valeurs à 1e-9 près d'un entier."""
    value = scale * base ** exponent
    nearest = round(value)
    if abs(value - nearest) <= INTEGER_SNAP * max(1.0, value):
        return int(nearest)
    return int(math.ceil(value))


def eta(t: int) -> float:
    """η_t = 1/(2^t − 1)."""
    return 1.0 / (2 ** t - 1)


def group_count(k: int, t: int) -> int:
    """
    Nombre de groupes ceil(k^{1−η_t}) d'un niveau à t tours restants.

    Plafonné à k − 1 pour qu'au moins un groupe compte deux items.
    """
    if k <= 1:
        return 1
    return max(1, min(snapped_power(k, 1.0 - eta(t)), k - 1))


def sample_size(k: int, t: int, h_constant: float = DEFAULT_H_CONSTANT) -> int:
    """|H| = min(k, ceil(h·k^{2^{t−1}/(2^t−1)}))."""
    return min(k, snapped_power(k, 2 ** (t - 1) / (2 ** t - 1), h_constant))


def partition_items(
    items: Sequence[int],
    group_count: int,
    rng: Optional[np.random.Generator] = None,
    permutation: Optional[Sequence[int]] = None,
) -> List[List[int]]:
    """
    Partition équilibrée (tailles à 1 près, les premiers groupes plus grands).

    Args:
        items: Identifiants à répartir
        group_count: Nombre de groupes (≥ 1)
        rng: Si fourni, les items sont d'abord permutés aléatoirement
        permutation: Ordre explicite (positions dans items); l'identité par défaut

    Returns:
        Liste de groupes, blocs contigus dans l'ordre retenu
    """
    if group_count < 1:
        raise ConfigError(f"group_count={group_count} doit être ≥ 1")
    ordered = np.asarray(items, dtype=np.int64)
    if permutation is not None:
        ordered = ordered[np.asarray(permutation, dtype=np.int64)]
    elif rng is not None:
        ordered = rng.permutation(ordered)
    return [chunk.tolist() for chunk in np.array_split(ordered, min(group_count, max(len(ordered), 1)))]


def _round_robin_winner(items: Sequence[int], oracle: ComparatorOracle) -> int:
    """Tous les C(k,2) matchs; le plus de victoires gagne, égalités au plus petit identifiant."""
    wins = {item: 0 for item in items}
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            winner = oracle.query(items[a], items[b])
            if winner is not None:
                wins[winner] += 1
    best = max(wins.values())
    return min(item for item, count in wins.items() if count == best)


def _play_round(groups: List[List[int]], oracle: ComparatorOracle) -> Tuple[List[int], int]:
    """Un tour: round-robin dans chaque groupe. Renvoie (gagnants, requêtes)."""
    oracle.new_round()
    before = oracle.queries_total
    winners = [_round_robin_winner(group, oracle) for group in groups]
    return winners, oracle.queries_total - before


def round_robin(items: Sequence[int], oracle: ComparatorOracle) -> SelectionResult:
    """
    Round-robin en un tour: 2-approximation.

    Args:
        items: Identifiants (|items| ≥ 1)
        oracle: Comparateur

    Returns:
        SelectionResult (aucun tour quand un seul item)
    """
    items = list(items)
    if not items:
        raise ConfigError("Aucun item à sélectionner")
    if len(items) == 1:
        return SelectionResult(winner=items[0])
    (winner,), queries = _play_round([items], oracle)
    return SelectionResult(winner=winner, queries_per_round=[queries])


def _descend(items: List[int], t: int, stop_at: int, oracle: ComparatorOracle) -> Tuple[List[int], List[int]]:
    """
    Niveaux de récursion de t tours restants jusqu'à stop_at (exclu).

    Renvoie les items restants et les requêtes par tour.
    """
    current, per_round = list(items), []
    level = t
    while level > stop_at and len(current) > 1:
        groups = partition_items(current, group_count(len(current), level))
        current, queries = _play_round(groups, oracle)
        per_round.append(queries)
        logger.debug(f"[SELECT] Niveau t={level}: {len(groups)} groupes, {queries} requêtes, {len(current)} gagnants")
        level -= 1
    return current, per_round


def multi_round(items: Sequence[int], t: int, oracle: ComparatorOracle) -> SelectionResult:
    """
    Tournoi à t tours: 2t-approximation avec O(t·k^{1+1/(2^t−1)}) requêtes.

    Chaque niveau partitionne en ceil(k^{1−η}) groupes et fait un round-robin
    par groupe; le dernier niveau est un round-robin des gagnants.
    """
    if t < 1:
        raise ConfigError(f"t={t} doit être ≥ 1")
    items = list(items)
    if not items:
        raise ConfigError("Aucun item à sélectionner")
    current, per_round = _descend(items, t, 1, oracle)
    if len(current) > 1:
        final = round_robin(current, oracle)
        return SelectionResult(winner=final.winner, queries_per_round=per_round + final.queries_per_round)
    return SelectionResult(winner=current[0], queries_per_round=per_round)


def two_round(items: Sequence[int], oracle: ComparatorOracle) -> SelectionResult:
    """Cas t = 2 (η = 1/3): 4-approximation avec O(k^{4/3}) requêtes."""
    return multi_round(items, 2, oracle)


def better_multi_round(
    items: Sequence[int],
    t: int,
    oracle: ComparatorOracle,
    rng: np.random.Generator,
    h_constant: float = DEFAULT_H_CONSTANT,
) -> SelectionResult:
    """
    Tournoi à t tours renforcé: 3-approximation avec probabilité 9/10.

    multi_round sur une permutation aléatoire, arrêté avant le dernier niveau
    (survivants L), puis round-robin de L ∪ H avec H tiré uniformément sans remise.
    """
    if t < 1:
        raise ConfigError(f"t={t} doit être ≥ 1")
    items = list(items)
    if not items:
        raise ConfigError("Aucun item à sélectionner")
    k = len(items)
    permuted = rng.permutation(np.asarray(items, dtype=np.int64)).tolist()
    h_size = sample_size(k, t, h_constant)
    if h_size >= k:
        # H couvre tous les items: la finale est un round-robin complet
        survivors, per_round = permuted, []
    else:
        survivors, per_round = _descend(permuted, t, 1, oracle)

    sampled = rng.choice(np.asarray(items, dtype=np.int64), size=h_size, replace=False).tolist()
    finalists = list(dict.fromkeys(survivors + sampled))
    final = round_robin(finalists, oracle)
    logger.debug(f"[SELECT] |L|={len(survivors)}, |H|={len(sampled)}, finale sur {len(finalists)} items")
    return SelectionResult(
        winner=final.winner,
        queries_per_round=per_round + final.queries_per_round,
        survivors=tuple(survivors),
        sampled_set=tuple(sampled),
    )


def knockout(items: Sequence[int], oracle: ComparatorOracle) -> SelectionResult:
    """
    Élimination directe: k − 1 requêtes en ceil(log2 k) tours.

    Les items jouent par paires consécutives; un item impair est exempté.
    """
    current = list(items)
    if not current:
        raise ConfigError("Aucun item à sélectionner")
    per_round = []
    while len(current) > 1:
        pairs = [current[i:i + 2] for i in range(0, len(current), 2)]
        current, queries = _play_round(pairs, oracle)
        per_round.append(queries)
    return SelectionResult(winner=current[0], queries_per_round=per_round)


SelectProcedure = Callable[[Sequence[int], ComparatorOracle, np.random.Generator], SelectionResult]


def amplify(
    select: SelectProcedure,
    repetitions: int,
    items: Sequence[int],
    oracle: ComparatorOracle,
    rng: np.random.Generator,
) -> SelectionResult:
    """
    Répète une procédure r fois (en parallèle, conceptuellement) puis fait un
    round-robin des gagnants distincts. Ajoute au plus 2 à la borne d'approximation.

    Requêtes: r·base + C(#gagnants distincts, 2); tours: max des répétitions + 1.
    """
    if repetitions < 1:
        raise ConfigError(f"repetitions={repetitions} doit être ≥ 1")
    results = [select(items, oracle, rng) for _ in range(repetitions)]
    if repetitions == 1:
        return results[0]

    depth = max(result.rounds_used for result in results)
    per_round = [0] * depth
    for result in results:
        for r, queries in enumerate(result.queries_per_round):
            per_round[r] += queries
    winners = list(dict.fromkeys(result.winner for result in results))
    final = round_robin(winners, oracle)
    return SelectionResult(winner=final.winner, queries_per_round=per_round + final.queries_per_round)


def multi_round_query_count(k: int, t: int) -> int:
    """Nombre exact de requêtes de multi_round sur k items (indépendant des réponses)."""
    return sum(_level_query_counts(k, t, 1)) + _pairs(_level_sizes(k, t, 1)[-1])


def better_multi_round_query_bound(k: int, t: int, h_constant: float = DEFAULT_H_CONSTANT) -> int:
    """Pire cas des requêtes de better_multi_round: niveaux + C(min(k, |L| + |H|), 2)."""
    if sample_size(k, t, h_constant) >= k:
        return _pairs(k)
    survivors = _level_sizes(k, t, 1)[-1]
    finalists = min(k, survivors + sample_size(k, t, h_constant))
    return sum(_level_query_counts(k, t, 1)) + _pairs(finalists)


def survivor_count(k: int, t: int) -> int:
    """|L| de better_multi_round."""
    return _level_sizes(k, t, 1)[-1]


def _pairs(n: int) -> int:
    return n * (n - 1) // 2


def _level_sizes(k: int, t: int, stop_at: int) -> List[int]:
    sizes, level = [k], t
    while level > stop_at and sizes[-1] > 1:
        sizes.append(group_count(sizes[-1], level))
        level -= 1
    return sizes


def _level_query_counts(k: int, t: int, stop_at: int) -> List[int]:
    sizes, counts = _level_sizes(k, t, stop_at), []
    for level_index, size in enumerate(sizes[:-1]):
        groups = sizes[level_index + 1]
        base, extra = divmod(size, groups)
        counts.append(extra * _pairs(base + 1) + (groups - extra) * _pairs(base))
    return counts
