"""
Scheffé Module
==============

Test de Scheffé entre deux hypothèses et sa version localement privée par
réponse aléatoire. C'est le comparateur élémentaire de la réduction.

Classes:
    ScheffeWitness: Ensemble S = {x : q1(x) > q2(x)} et masses exactes q1(S), q2(S)
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import Dist
from .exceptions import InvalidDistributionError
from .mechanisms import randomized_response, rr_debias

logger = logging.getLogger(__name__)

FIRST = 0
SECOND = 1


@dataclass(frozen=True, eq=False)
class ScheffeWitness:
    """Masque d'appartenance à S et masses exactes des deux hypothèses sur S."""

    mask: np.ndarray
    q1S: float
    q2S: float

    @property
    def gap(self) -> float:
        return self.q1S - self.q2S

    def decide(self, estimate: float) -> int:
        """FIRST ssi q1(S) est strictement plus proche de l'estimation, sinon SECOND."""
        if abs(self.q1S - estimate) < abs(self.q2S - estimate):
            return FIRST
        return SECOND


def scheffe_set(q1: Dist, q2: Dist) -> ScheffeWitness:
    """S = {x : q1(x) > q2(x)} (inégalité stricte)."""
    if q1.alphabet_size != q2.alphabet_size:
        raise InvalidDistributionError(
            f"Alphabets incompatibles: {q1.alphabet_size} != {q2.alphabet_size}"
        )
    mask = q1.weights > q2.weights
    mask.setflags(write=False)
    return ScheffeWitness(mask=mask, q1S=float(q1.weights[mask].sum()), q2S=float(q2.weights[mask].sum()))


def scheffe_test(samples, q1: Dist, q2: Dist) -> int:
    """
    Test de Scheffé non privé.

    Args:
        samples: Symboles tirés de p (n ≥ 1)
        q1: Première hypothèse
        q2: Seconde hypothèse

    Returns:
        FIRST (q1) ou SECOND (q2); les égalités renvoient SECOND
    """
    witness = scheffe_set(q1, q2)
    symbols = np.asarray(samples, dtype=np.int64)
    estimate = float(witness.mask[symbols].mean())
    return witness.decide(estimate)


def private_mass_estimate(samples, witness: ScheffeWitness, epsilon: float, rng: np.random.Generator) -> float:
    """Estimation débiaisée de p(S) à partir des bits 1{X_i ∈ S} passés par réponse aléatoire."""
    bits = witness.mask[np.asarray(samples, dtype=np.int64)].astype(np.int8)
    reports = randomized_response(bits, epsilon, rng)
    return float(rr_debias(reports.mean(), epsilon))


def ldp_scheffe(
    samples,
    q1: Dist,
    q2: Dist,
    epsilon: float,
    rng: np.random.Generator,
    witness: Optional[ScheffeWitness] = None,
) -> int:
    """
    Test de Scheffé localement privé: chaque utilisateur envoie
    randomized_response(1{X_i ∈ S}); le serveur débiaise la moyenne puis
    applique la règle de décision.

    Returns:
        FIRST (q1) ou SECOND (q2)
    """
    witness = witness or scheffe_set(q1, q2)
    estimate = private_mass_estimate(samples, witness, epsilon, rng)
    return witness.decide(estimate)
