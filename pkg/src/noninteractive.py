"""
Non-Interactive Protocol Module
===============================

Protocole non interactif à un tour: chaque utilisateur aplatit son
échantillon, puis envoie un log-rapport de vraisemblance bruité par Laplace
contre l'hypothèse de son groupe. Le serveur retient l'argmin des moyennes.

Classes:
    NiConfig: Paramètres résolus d'une exécution (groupes, L, γ, bruit)
    NiResult: Indice choisi, scores C_i et transcription
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .distributions import Dist, HypothesisSet
from .exceptions import ConfigError, InfeasibleInstanceError, InsufficientSamplesError, ProtocolViolationError
from .flattening import apply_flatten, build_flatten_map, flatten_hypotheses, push_forward
from .mechanisms import PrivacyParams, laplace_noise
from .reduction import Transcript

logger = logging.getLogger(__name__)

BOUND_TOLERANCE = 1e-9


def balanced_group_sizes(n: int, k: int) -> Tuple[int, ...]:
    """Tailles des groupes quand l'utilisateur j rejoint le groupe j mod k."""
    base, extra = divmod(n, k)
    return tuple(base + (1 if i < extra else 0) for i in range(k))


@dataclass(frozen=True)
class NiConfig:
    """Configuration résolue du protocole non interactif."""

    epsilon: float
    n: int
    group_sizes: Tuple[int, ...]
    L: float
    gamma: Dist
    noise_mode: str = "strict"

    def __post_init__(self):
        PrivacyParams(self.epsilon, self.noise_mode)
        if sum(self.group_sizes) != self.n:
            raise ConfigError(f"Les tailles de groupes totalisent {sum(self.group_sizes)} au lieu de n={self.n}")
        if max(self.group_sizes) - min(self.group_sizes) > 1:
            raise ConfigError(f"Groupes déséquilibrés: {self.group_sizes}")
        if self.L < 0:
            raise ConfigError(f"L={self.L} négatif")

    @property
    def k(self) -> int:
        return len(self.group_sizes)

    def check_bound(self, hypotheses: HypothesisSet) -> None:
        """Vérifie |log(γ(a)/q_i(a))| ≤ L partout où γ(a) > 0."""
        actual = compute_L(hypotheses, self.gamma)
        if actual > self.L + BOUND_TOLERANCE:
            raise ProtocolViolationError(f"L={self.L} trop petit: le log-rapport atteint {actual}")


@dataclass
class NiResult:
    """Résultat d'une exécution: argmin des scores (plus petit indice en cas d'égalité)."""

    chosen_index: int
    scores: np.ndarray
    transcript: Transcript
    L: float
    target_size: int


def compute_L(hypotheses: HypothesisSet, gamma: Dist) -> float:
    """
    max_{i,a: γ(a)>0} |log(γ(a)/q_i(a))|.

    Raises:
        InfeasibleInstanceError: q_i(a) = 0 en un point où γ(a) > 0, ou q_i chargeant un point où γ est nul
    """
    if gamma.alphabet_size != hypotheses.alphabet_size:
        raise ConfigError("γ et Q n'ont pas le même alphabet")
    matrix = hypotheses.matrix
    positive = gamma.weights > 0
    if np.any(matrix[:, ~positive] > 0):
        raise InfeasibleInstanceError("Une hypothèse charge un symbole où γ est nul")
    if np.any(matrix[:, positive] == 0):
        raise InfeasibleInstanceError("Log-rapport non borné: q_i(a) = 0 là où γ(a) > 0")
    ratios = np.log(gamma.weights[positive][None, :] / matrix[:, positive])
    return float(np.abs(ratios).max()) if ratios.size else 0.0


def check_flattened_bound(L: float, k: int) -> float:
    """
    Vérifie L ≤ log(2(k+1)) après aplatissement avec γ uniforme; renvoie la borne.

    Raises:
        ProtocolViolationError: L dépasse la borne
    """
    bound = float(np.log(2 * (k + 1)))
    if L > bound + BOUND_TOLERANCE:
        raise ProtocolViolationError(f"L={L:.6f} dépasse log 2(k+1) = {bound:.6f} pour k={k}")
    return bound


def _log_ratios(symbols: np.ndarray, q: Dist, gamma: Dist, L: float) -> np.ndarray:
    q_mass = q.weights[symbols]
    gamma_mass = gamma.weights[symbols]
    if np.any(q_mass <= 0) or np.any(gamma_mass <= 0):
        raise ProtocolViolationError("Message à un symbole de masse nulle: aplatissement omis ou L trop petit")
    ratios = np.log(gamma_mass / q_mass)
    if np.any(np.abs(ratios) > L + BOUND_TOLERANCE):
        raise ProtocolViolationError(f"Log-rapport hors de [-{L}, {L}]: max {np.abs(ratios).max()}")
    return ratios


def user_message(
    a,
    q: Dist,
    gamma: Dist,
    L: float,
    epsilon: float,
    mode: str,
    rng: np.random.Generator,
):
    """
    Message Z = log(γ(a)/q(a)) + Lap à l'échelle du mode.

    Accepte un symbole ou un tableau de symboles (un message par utilisateur).

    Raises:
        ProtocolViolationError: masse nulle en a ou log-rapport hors de [−L, L]
    """
    symbols = np.asarray(a, dtype=np.int64)
    ratios = _log_ratios(np.atleast_1d(symbols), q, gamma, L)
    messages = ratios + laplace_noise(L, epsilon, mode, rng, size=ratios.size)
    if symbols.ndim == 0:
        return float(messages[0])
    return messages


def run_noninteractive(
    hypotheses: HypothesisSet,
    samples,
    epsilon: float,
    mode: str,
    rng: np.random.Generator,
) -> NiResult:
    """
    Exécute le protocole non interactif sur n échantillons de p.

    Args:
        hypotheses: Ensemble Q
        samples: n symboles tirés de p, un par utilisateur
        epsilon: Paramètre de confidentialité
        mode: "strict", "paper" ou "nominal"
        rng: Générateur numpy de l'essai

    Returns:
        NiResult avec l'argmin des moyennes de groupe
    """
    samples = np.asarray(samples, dtype=np.int64)
    n, k = samples.size, hypotheses.k
    if n < k:
        raise InsufficientSamplesError(requested=k, available=n)

    flatten_map = build_flatten_map(hypotheses)
    flattened = flatten_hypotheses(flatten_map, hypotheses)
    gamma = Dist(np.full(flatten_map.target_size, 1.0 / flatten_map.target_size))
    L = compute_L(flattened, gamma)
    config = NiConfig(
        epsilon=epsilon,
        n=n,
        group_sizes=balanced_group_sizes(n, k),
        L=L,
        gamma=gamma,
        noise_mode=mode,
    )
    config.check_bound(flattened)
    bound = check_flattened_bound(L, k)
    logger.debug(f"[NI] k={k}, n={n}, N'={flatten_map.target_size}, L={L:.4f} (log 2(k+1) = {bound:.4f})")

    # chaque utilisateur aplatit son propre échantillon
    symbols = apply_flatten(flatten_map, samples, rng)
    users = np.arange(n)
    groups = users % k

    transcript = Transcript()
    transcript.open_round()
    scores = np.empty(k)
    for i in range(k):
        members = users[groups == i]
        messages = user_message(symbols[members], flattened[i], gamma, L, epsilon, mode, rng)
        scores[i] = messages.mean()
        transcript.record(members, tag="laplace", epsilon=epsilon, comparisons=0)

    chosen = int(np.argmin(scores))
    transcript.chosen = chosen
    return NiResult(chosen_index=chosen, scores=scores, transcript=transcript, L=L, target_size=flatten_map.target_size)


def expected_scores(hypotheses: HypothesisSet, p: Dist) -> np.ndarray:
    """
    E[C_i] exact sur l'instance aplatie: Σ_b (φ∘p)(b)·log(γ(b)/(φ∘q_i)(b)), γ uniforme.

    Le bruit de Laplace est centré et n'intervient pas.
    """
    flatten_map = build_flatten_map(hypotheses)
    flattened = flatten_hypotheses(flatten_map, hypotheses)
    p_flat = push_forward(flatten_map, p).weights
    log_gamma = -np.log(flatten_map.target_size)
    return (p_flat[None, :] * (log_gamma - np.log(flattened.matrix))).sum(axis=1)


def ni_required_users(k: int, alpha: float, epsilon: float, constant: float = 1.0, cap: Optional[int] = None) -> int:
    """
    Ordre de grandeur n ≈ C·k·log³k/(α⁴ε²) du nombre d'utilisateurs, plafonné si demandé.
    """
    log_k = max(np.log(k), 1.0)
    n = int(np.ceil(constant * k * log_k ** 3 / (alpha ** 4 * epsilon ** 2)))
    n = max(n, k)
    return min(n, cap) if cap is not None else n
