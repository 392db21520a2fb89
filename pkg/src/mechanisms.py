"""
Mechanisms Module
=================

Primitives de confidentialité locale: réponse aléatoire, débiaisage,
bruit de Laplace et registre de dépense de confidentialité par utilisateur.

Classes:
    PrivacyParams: Paramètres (epsilon, mode de bruit)
    PrivacyLedger: Registre des participations (utilisateur, tour, mécanisme, epsilon)
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.special import expit
from scipy.stats import laplace

from .exceptions import ConfigError, PrivacyViolationError

logger = logging.getLogger(__name__)

MAX_EPSILON = 10.0
NOISE_MODES = ("strict", "paper", "nominal")
SPEND_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PrivacyParams:
    """Paramètres de confidentialité: epsilon ∈ ]0, 10] et mode d'échelle de Laplace."""

    epsilon: float
    noise_mode: str = "strict"

    def __post_init__(self):
        if not 0 < self.epsilon <= MAX_EPSILON:
            raise ConfigError(f"epsilon={self.epsilon} hors de ]0, {MAX_EPSILON}]")
        if self.noise_mode not in NOISE_MODES:
            raise ConfigError(f"Mode de bruit inconnu: {self.noise_mode} (attendu: {NOISE_MODES})")


def keep_probability(epsilon: float) -> float:
    """e^ε / (1 + e^ε)."""
    return float(expit(epsilon))


def randomized_response(bit, epsilon: float, rng: np.random.Generator):
    """
    Réponse aléatoire binaire: conserve le bit avec probabilité e^ε/(1+e^ε).

    Accepte un bit isolé ou un tableau de bits (un tirage par bit).
    """
    bits = np.asarray(bit, dtype=np.int8)
    flips = rng.random(bits.shape) >= keep_probability(epsilon)
    out = np.where(flips, 1 - bits, bits).astype(np.int8)
    if out.ndim == 0:
        return int(out)
    return out


def rr_output_law(bit: int, epsilon: float) -> np.ndarray:
    """Loi exacte [P(sortie=0), P(sortie=1)] de la réponse aléatoire pour une entrée donnée."""
    keep = keep_probability(epsilon)
    law = np.array([keep, 1.0 - keep]) if bit == 0 else np.array([1.0 - keep, keep])
    return law


def rr_debias(mean_of_outputs, epsilon: float):
    """
    Estimateur débiaisé (e^ε+1)/(e^ε−1)·(moyenne − 1/(e^ε+1)).

    Le résultat n'est pas borné à [0, 1].
    """
    e = np.exp(epsilon)
    return (e + 1.0) / (e - 1.0) * (np.asarray(mean_of_outputs, dtype=float) - 1.0 / (e + 1.0))


def laplace_scale(sensitivity: float, epsilon: float, mode: str = "strict") -> float:
    """
    Échelle du bruit pour une statistique à valeurs dans [−L, L].

    strict: 2L/ε (sensibilité 2L, ε-DP exact); paper (alias nominal): L/ε.
    """
    if sensitivity < 0:
        raise ConfigError(f"Sensibilité négative: {sensitivity}")
    if mode not in NOISE_MODES:
        raise ConfigError(f"Mode de bruit inconnu: {mode}")
    factor = 2.0 if mode == "strict" else 1.0
    return factor * sensitivity / epsilon


def laplace_noise(
    sensitivity: float,
    epsilon: float,
    mode: str,
    rng: np.random.Generator,
    size: Optional[Union[int, Tuple[int, ...]]] = None,
):
    """
    Bruit de Laplace centré, tiré par inversion de la fonction de répartition.

    Args:
        sensitivity: Borne L sur |statistique|
        epsilon: Paramètre de confidentialité
        mode: "strict", "paper" ou "nominal"
        rng: Générateur numpy
        size: Nombre de tirages (None pour un scalaire)
    """
    scale = laplace_scale(sensitivity, epsilon, mode)
    uniforms = rng.random(size)
    if scale == 0:
        noise = np.zeros_like(uniforms)
    else:
        tiny = np.finfo(float).tiny
        noise = laplace.ppf(np.clip(uniforms, tiny, 1.0 - np.finfo(float).eps), scale=scale)
    if size is None:
        return float(noise)
    return noise


@dataclass
class PrivacyLedger:
    """
    Registre des participations de chaque utilisateur.

    Chaque enregistrement couvre un lot d'utilisateurs ayant émis un message
    dans un tour donné via un mécanisme étiqueté, à une dépense epsilon.
    """

    _user_chunks: List[np.ndarray] = field(default_factory=list)
    _round_chunks: List[np.ndarray] = field(default_factory=list)
    _spend_chunks: List[np.ndarray] = field(default_factory=list)
    tags: List[str] = field(default_factory=list)

    def record(self, user_ids, round_index: int, tag: str, epsilon: float) -> None:
        ids = np.atleast_1d(np.asarray(user_ids, dtype=np.int64))
        if ids.size == 0:
            return
        self._user_chunks.append(ids)
        self._round_chunks.append(np.full(ids.size, round_index, dtype=np.int64))
        self._spend_chunks.append(np.full(ids.size, epsilon, dtype=float))
        self.tags.append(tag)

    def _arrays(self):
        if not self._user_chunks:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0)
        return (
            np.concatenate(self._user_chunks),
            np.concatenate(self._round_chunks),
            np.concatenate(self._spend_chunks),
        )

    @property
    def participants(self) -> int:
        users, _, _ = self._arrays()
        return int(np.unique(users).size)

    @property
    def messages(self) -> int:
        return int(sum(chunk.size for chunk in self._user_chunks))

    def spend_per_user(self) -> Tuple[np.ndarray, np.ndarray]:
        """(identifiants, dépense cumulée) triés par identifiant."""
        users, _, spend = self._arrays()
        ids, inverse = np.unique(users, return_inverse=True)
        return ids, np.bincount(inverse, weights=spend, minlength=ids.size)

    def violations(self, budget: float) -> List[str]:
        """Liste des violations (vide si le registre est conforme)."""
        users, rounds, _ = self._arrays()
        problems = []
        if users.size == 0:
            return problems

        pairs = np.unique(np.stack([users, rounds], axis=1), axis=0)
        ids, counts = np.unique(pairs[:, 0], return_counts=True)
        multi_round = ids[counts > 1]
        if multi_round.size:
            problems.append(f"{multi_round.size} utilisateurs présents dans plusieurs tours (ex: {multi_round[:5].tolist()})")

        spend_ids, spend = self.spend_per_user()
        over = spend_ids[spend > budget + SPEND_TOLERANCE]
        if over.size:
            problems.append(f"{over.size} utilisateurs au-delà du budget {budget} (ex: {over[:5].tolist()})")
        return problems

    def assert_budget(self, budget: float) -> bool:
        """
        Vérifie disjonction des tours et budget par utilisateur.

        Raises:
            PrivacyViolationError: double participation ou dépassement de budget
        """
        problems = self.violations(budget)
        if problems:
            message = "; ".join(problems)
            logger.error(f"[LEDGER] {message}")
            raise PrivacyViolationError(message)
        return True
