"""
Flattening Module
=================

Application aléatoire φ:[N] → [N'] rendant toutes les hypothèses presque
uniformes tout en divisant exactement par deux les distances en variation totale.

Classes:
    FlattenMap: Description immuable de φ (taille cible, blocs S_a, mélange 1/2)
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Union

import numpy as np

from .distributions import Dist, HypothesisSet
from .exceptions import InvalidDistributionError

logger = logging.getLogger(__name__)

MIX_PROB = 0.5
# M(a)·N est un produit flottant: on tolère un léger excès avant l'arrondi supérieur
CEIL_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class FlattenMap:
    """
    Blocs contigus S_a = [starts[a], starts[a] + lengths[a]) de [N'].

    |S_a| = ceil(M(a)·N) avec M(a) = max_i q_i(a); les blocs vides
    correspondent aux symboles de masse nulle sous toutes les hypothèses.
    """

    source_size: int
    target_size: int
    starts: np.ndarray
    lengths: np.ndarray
    mix_prob: float = MIX_PROB

    def block(self, a: int) -> range:
        return range(int(self.starts[a]), int(self.starts[a] + self.lengths[a]))

    def describe(self) -> Dict[str, Any]:
        """Représentation JSON: blocs en paires [start, len]."""
        return {
            "source_size": self.source_size,
            "target_size": self.target_size,
            "mix_prob": self.mix_prob,
            "blocks": [[int(s), int(n)] for s, n in zip(self.starts, self.lengths)],
        }


def build_flatten_map(hypotheses: HypothesisSet) -> FlattenMap:
    """
    Construit φ à partir de l'ensemble d'hypothèses.

    Args:
        hypotheses: Ensemble Q (k ≥ 1)

    Returns:
        FlattenMap avec N' = Σ_a ceil(M(a)·N)
    """
    N = hypotheses.alphabet_size
    M = hypotheses.matrix.max(axis=0)
    lengths = np.where(M > 0, np.maximum(np.ceil(M * N - CEIL_SLACK), 1), 0).astype(np.int64)
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1])).astype(np.int64)
    target_size = int(lengths.sum())
    lengths.setflags(write=False)
    starts.setflags(write=False)

    empty = int((lengths == 0).sum())
    if empty:
        logger.debug(f"[FLATTEN] {empty} symboles de masse nulle routés vers la branche uniforme")
    logger.debug(f"[FLATTEN] N={N} → N'={target_size} (k={hypotheses.k})")
    return FlattenMap(source_size=N, target_size=target_size, starts=starts, lengths=lengths)


def apply_flatten(flatten_map: FlattenMap, a: Union[int, np.ndarray], rng: np.random.Generator):
    """
    Image aléatoire φ(a) d'un symbole (ou d'un tableau de symboles).

    Avec probabilité 1/2 uniforme sur S_a, sinon uniforme sur [N'];
    uniforme sur [N'] sans condition quand S_a est vide.

    Raises:
        InvalidDistributionError: symbole hors de [N]
    """
    symbols = np.asarray(a, dtype=np.int64)
    if np.any(symbols < 0) or np.any(symbols >= flatten_map.source_size):
        raise InvalidDistributionError(f"Symbole hors de [0, {flatten_map.source_size}): {a}")

    shape = symbols.shape
    # mix_prob est la probabilité de la branche uniforme
    coins = rng.random(shape) >= flatten_map.mix_prob
    offsets = rng.random(shape)
    uniform = rng.integers(0, flatten_map.target_size, size=shape)

    lengths = flatten_map.lengths[symbols]
    in_block = flatten_map.starts[symbols] + np.floor(offsets * lengths).astype(np.int64)
    result = np.where(coins & (lengths > 0), in_block, uniform)
    if result.ndim == 0:
        return int(result)
    return result


def push_forward(flatten_map: FlattenMap, d: Dist) -> Dist:
    """
    Loi exacte de φ(a) quand a ~ d.

    (φ∘d)(b) = 1/(2N') + ½·Σ_{a: b∈S_a} d(a)/|S_a|, la masse des blocs vides
    étant entièrement versée au terme uniforme.
    """
    if d.alphabet_size != flatten_map.source_size:
        raise InvalidDistributionError(
            f"Alphabets incompatibles: {d.alphabet_size} != {flatten_map.source_size}"
        )
    lengths = flatten_map.lengths
    nonempty = lengths > 0
    zero_block_mass = float(d.weights[~nonempty].sum())

    uniform_mass = flatten_map.mix_prob + (1.0 - flatten_map.mix_prob) * zero_block_mass
    weights = np.full(flatten_map.target_size, uniform_mass / flatten_map.target_size)
    per_symbol = (1.0 - flatten_map.mix_prob) * d.weights[nonempty] / lengths[nonempty]
    weights += np.repeat(per_symbol, lengths[nonempty])
    return Dist(weights)


def flatten_hypotheses(flatten_map: FlattenMap, hypotheses: HypothesisSet) -> HypothesisSet:
    """Pousse chaque q_i à travers φ."""
    return HypothesisSet(tuple(push_forward(flatten_map, q) for q in hypotheses))
