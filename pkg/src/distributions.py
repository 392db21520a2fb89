"""
Distributions Module
====================

Distributions discrètes sur un alphabet fini [N], distances, échantillonnage
et générateurs d'instances utilisés par tous les protocoles.

Classes:
    Dist: Distribution de probabilité discrète immuable
    HypothesisSet: Ensemble ordonné de k hypothèses sur un alphabet commun
    InstanceMeta: Métadonnées d'une instance (indice vrai, séparation, beta)
"""

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from .exceptions import InfeasibleInstanceError, InvalidDistributionError

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-9
MAX_HARD_DIMENSION = 16
MAX_REJECTION_ATTEMPTS = 100_000


@dataclass(frozen=True, eq=False)
class Dist:
    """Distribution discrète immuable sur l'alphabet [N]."""

    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).ravel()
        if weights.size == 0:
            raise InvalidDistributionError("Distribution vide")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InvalidDistributionError(f"Poids négatifs ou non finis: {weights}")
        total = weights.sum()
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise InvalidDistributionError(f"La somme des poids vaut {total}, attendu 1")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        # table cumulative pour l'échantillonnage par recherche dichotomique
        cdf = np.cumsum(weights)
        cdf[-1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "_cdf", cdf)

    @property
    def alphabet_size(self) -> int:
        return int(self.weights.size)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def __len__(self) -> int:
        return self.alphabet_size

    def __getitem__(self, index):
        return self.weights[index]

    def allclose(self, other: "Dist", atol: float = 1e-12) -> bool:
        return self.alphabet_size == other.alphabet_size and np.allclose(
            self.weights, other.weights, atol=atol, rtol=0.0
        )

    def __repr__(self) -> str:
        return f"Dist(N={self.alphabet_size}, weights={np.array2string(self.weights, precision=4)})"


@dataclass(frozen=True)
class HypothesisSet:
    """Ensemble ordonné Q = {q_1, ..., q_k} partageant le même alphabet."""

    hypotheses: Tuple[Dist, ...]

    def __post_init__(self):
        hypotheses = tuple(self.hypotheses)
        if not hypotheses:
            raise InvalidDistributionError("Ensemble d'hypothèses vide")
        sizes = {q.alphabet_size for q in hypotheses}
        if len(sizes) != 1:
            raise InvalidDistributionError(f"Alphabets incompatibles dans l'ensemble: {sorted(sizes)}")
        object.__setattr__(self, "hypotheses", hypotheses)
        matrix = np.vstack([q.weights for q in hypotheses])
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)

    @property
    def k(self) -> int:
        return len(self.hypotheses)

    @property
    def alphabet_size(self) -> int:
        return self.hypotheses[0].alphabet_size

    @property
    def matrix(self) -> np.ndarray:
        """Matrice k x N des poids (lecture seule)."""
        return self._matrix

    def __len__(self) -> int:
        return self.k

    def __getitem__(self, index: int) -> Dist:
        return self.hypotheses[index]

    def __iter__(self) -> Iterator[Dist]:
        return iter(self.hypotheses)

    def pairwise_tv(self) -> np.ndarray:
        """Matrice k x k des distances en variation totale."""
        diff = np.abs(self._matrix[:, None, :] - self._matrix[None, :, :])
        return 0.5 * diff.sum(axis=2)

    def separation(self) -> float:
        """min_{i≠j} d_TV(q_i, q_j); +inf quand k = 1."""
        if self.k == 1:
            return float("inf")
        tv = self.pairwise_tv()
        return float(tv[~np.eye(self.k, dtype=bool)].min())


@dataclass(frozen=True)
class InstanceMeta:
    """Métadonnées d'une instance: indice de p dans Q, séparation alpha, beta."""

    true_index: Optional[int] = None
    separation: Optional[float] = None
    beta: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def validate(self, k: int) -> None:
        if self.true_index is not None and not 0 <= self.true_index < k:
            raise InvalidDistributionError(f"true_index={self.true_index} hors de [0, {k})")


def make_dist(weights: Sequence[float]) -> Dist:
    """
    Construit une distribution en normalisant un vecteur de poids positifs.

    Args:
        weights: Poids positifs ou nuls, de somme strictement positive

    Returns:
        Dist normalisée

    Raises:
        InvalidDistributionError: entrée négative ou somme nulle
    """
    vector = np.asarray(weights, dtype=float).ravel()
    if vector.size == 0:
        raise InvalidDistributionError("Vecteur de poids vide")
    if np.any(vector < 0):
        raise InvalidDistributionError(f"Entrée négative dans {vector}")
    total = vector.sum()
    if not total > 0:
        raise InvalidDistributionError("Vecteur de somme nulle")
    return Dist(vector / total)


def _check_same_alphabet(p: Dist, q: Dist) -> None:
    if p.alphabet_size != q.alphabet_size:
        raise InvalidDistributionError(
            f"Alphabets incompatibles: {p.alphabet_size} != {q.alphabet_size}"
        )


def tv_distance(p: Dist, q: Dist) -> float:
    """Distance en variation totale, ½‖p − q‖₁."""
    _check_same_alphabet(p, q)
    return float(0.5 * np.abs(p.weights - q.weights).sum())


def kl_divergence(q: Dist, r: Dist) -> float:
    """
    Divergence de Kullback-Leibler D_KL(q‖r) en nats.

    Convention 0·log(0/·) = 0; renvoie +inf dès que q(a) > 0 et r(a) = 0.
    """
    _check_same_alphabet(q, r)
    return float(rel_entr(q.weights, r.weights).sum())


def sample(d: Dist, rng: np.random.Generator, size: Optional[int] = None):
    """
    Tire des indices de l'alphabet selon d.

    Recherche dichotomique dans la table cumulative; déterministe pour un état
    de générateur donné. Renvoie un int si size est None, sinon un tableau.
    """
    draws = rng.random(size)
    indices = np.searchsorted(d._cdf, draws, side="right")
    indices = np.minimum(indices, d.alphabet_size - 1)
    if size is None:
        return int(indices)
    return indices.astype(np.int64)


def min_tv_to_set(p: Dist, hypotheses: HypothesisSet) -> Tuple[float, int]:
    """beta = min_q d_TV(p, q) et le plus petit indice qui l'atteint."""
    if hypotheses is None or len(hypotheses) == 0:
        raise InvalidDistributionError("Ensemble d'hypothèses vide")
    if p.alphabet_size != hypotheses.alphabet_size:
        raise InvalidDistributionError("Alphabets incompatibles entre p et Q")
    distances = 0.5 * np.abs(hypotheses.matrix - p.weights[None, :]).sum(axis=1)
    index = int(np.argmin(distances))
    return float(distances[index]), index


def gen_hard_instance(d: int, alpha: float) -> Tuple[HypothesisSet, InstanceMeta]:
    """
    Famille difficile p_{b,j} sur {±1}^d, encodée sur un alphabet de taille 2^d.

    Le bit j (petit-boutiste) de l'indice vaut 1 ssi x_j = +1. Sous p_{b,j} la
    coordonnée j vaut b avec probabilité 1/2 + alpha, les autres sont uniformes.
    Hypothèse 2j ↔ b = +1, hypothèse 2j + 1 ↔ b = −1.
    """
    if not isinstance(d, (int, np.integer)) or d < 1 or d > MAX_HARD_DIMENSION:
        raise InfeasibleInstanceError(f"d={d} hors de [1, {MAX_HARD_DIMENSION}]")
    if not 0.0 <= alpha <= 0.5:
        raise InfeasibleInstanceError(f"alpha={alpha} hors de [0, 1/2]")

    size = 2 ** d
    indices = np.arange(size)
    rest = 1.0 / 2 ** (d - 1)
    hypotheses: List[Dist] = []
    for j in range(d):
        positive = ((indices >> j) & 1).astype(bool)
        for b in (+1, -1):
            agrees = positive if b == +1 else ~positive
            weights = np.where(agrees, 0.5 + alpha, 0.5 - alpha) * rest
            hypotheses.append(make_dist(weights))

    hypothesis_set = HypothesisSet(tuple(hypotheses))
    meta = InstanceMeta(separation=hypothesis_set.separation(), extra={"d": d, "alpha": alpha})
    logger.debug(f"[GEN] Instance difficile d={d}, alpha={alpha}: k={hypothesis_set.k}, N={size}")
    return hypothesis_set, meta


def gen_random_separated(
    k: int,
    N: int,
    alpha: float,
    rng: np.random.Generator,
    concentration: float = 1.0,
    max_attempts: int = MAX_REJECTION_ATTEMPTS,
) -> Tuple[HypothesisSet, InstanceMeta]:
    """
    Tire k distributions du simplexe (Dirichlet) deux à deux à distance TV ≥ alpha.

    Rejet incrémental: un candidat est gardé s'il est à distance ≥ alpha de tous
    les candidats déjà acceptés.

    Raises:
        InfeasibleInstanceError: plafond de tentatives dépassé
    """
    if k < 1 or N < 1:
        raise InfeasibleInstanceError(f"Paramètres invalides k={k}, N={N}")
    accepted: List[np.ndarray] = []
    attempts = 0
    while len(accepted) < k:
        if attempts >= max_attempts:
            raise InfeasibleInstanceError(
                f"Plafond de rejet atteint ({max_attempts} tentatives) pour k={k}, N={N}, alpha={alpha}; "
                f"{len(accepted)} distributions acceptées"
            )
        attempts += 1
        candidate = rng.dirichlet(np.full(N, concentration))
        if all(0.5 * np.abs(candidate - other).sum() >= alpha for other in accepted):
            accepted.append(candidate)

    hypothesis_set = HypothesisSet(tuple(make_dist(w) for w in accepted))
    logger.debug(f"[GEN] {k} distributions séparées obtenues en {attempts} tentatives")
    return hypothesis_set, InstanceMeta(separation=hypothesis_set.separation(), extra={"attempts": attempts})


def gen_peaked_instance(k: int, N: int, peak: float) -> Tuple[HypothesisSet, InstanceMeta]:
    """
    Instance structurée: q_i place la masse `peak` sur le symbole i, le reste uniformément.

    Requiert k ≤ N. Séparation exacte |peak − (1 − peak)/(N − 1)|.
    """
    if k > N or N < 2:
        raise InfeasibleInstanceError(f"Instance piquée impossible: k={k}, N={N}")
    if not 0.0 < peak < 1.0:
        raise InfeasibleInstanceError(f"peak={peak} hors de ]0, 1[")
    base = (1.0 - peak) / (N - 1)
    hypotheses = []
    for i in range(k):
        weights = np.full(N, base)
        weights[i] = peak
        hypotheses.append(make_dist(weights))
    hypothesis_set = HypothesisSet(tuple(hypotheses))
    return hypothesis_set, InstanceMeta(separation=hypothesis_set.separation())


def gen_agnostic_instance(
    k: int,
    N: int,
    alpha: float,
    beta: float,
    rng: np.random.Generator,
    concentration: float = 1.0,
) -> Tuple[HypothesisSet, Dist, InstanceMeta]:
    """
    Instance agnostique: Q séparé à alpha et p à distance TV exactement beta d'un membre q_{i*}.

    p = q_{i*} + s·(r − q_{i*}) avec r une direction aléatoire et s = beta / d_TV(q_{i*}, r).
    Le beta rapporté dans les métadonnées est min_q d_TV(p, q) (≤ beta).
    """
    if not 0.0 <= beta < 1.0:
        raise InfeasibleInstanceError(f"beta={beta} hors de [0, 1[")
    hypotheses, meta = gen_random_separated(k, N, alpha, rng, concentration=concentration)
    anchor_index = int(rng.integers(k))
    anchor = hypotheses[anchor_index].weights

    direction = rng.dirichlet(np.full(N, concentration))
    distance = 0.5 * np.abs(direction - anchor).sum()
    if distance < beta:
        # masse ponctuelle sur le symbole le moins chargé: d_TV = 1 − min q(a)
        direction = np.zeros(N)
        direction[int(np.argmin(anchor))] = 1.0
        distance = 0.5 * np.abs(direction - anchor).sum()
    if distance < beta:
        raise InfeasibleInstanceError(f"Impossible de placer p à distance {beta} de q_{anchor_index}")

    step = beta / distance if distance > 0 else 0.0
    p = make_dist(np.clip(anchor + step * (direction - anchor), 0.0, None))
    min_tv, nearest = min_tv_to_set(p, hypotheses)
    agnostic_meta = InstanceMeta(
        true_index=None,
        separation=meta.separation,
        beta=min_tv,
        extra={"anchor_index": anchor_index, "nearest_index": nearest, "target_beta": beta},
    )
    return hypotheses, p, agnostic_meta
