# Fichier __init__.py pour le package src
"""
LDP Hypothesis Selection Package
================================

Simulateur de sélection d'hypothèses sous confidentialité différentielle locale.

Modules:
    - distributions: Distributions discrètes, distances et générateurs d'instances
    - flattening: Application d'aplatissement φ
    - mechanisms: Réponse aléatoire, bruit de Laplace, registre de confidentialité
    - noninteractive: Protocole non interactif à log-vraisemblance bruitée
    - scheffe: Test de Scheffé et sa version privée
    - comparators: Oracles de comparaison adversariaux et construction (k, t)
    - selection: Tournois de sélection du maximum à t tours
    - reduction: Sélection d'hypothèses LDP par tournois de tests de Scheffé
    - harness: Banc d'expériences et jeu de borne inférieure
    - storage: Fichiers d'instance et émission des résultats
    - config: Configuration du projet

Classes principales:
    - Dist, HypothesisSet: Distributions et ensembles d'hypothèses
    - FlattenMap: Application d'aplatissement
    - ComparatorOracle: Contrat des comparateurs
    - SelectionResult: Résultat d'un tournoi
    - Transcript: Transcription d'un essai
    - Config: Configuration
"""

from .comparators import ComparatorOracle, LayeredTournament
from .config import Config, HarnessConfig, LoggingConfig, PrivacyConfig, ScheffeConfig, SelectionConfig
from .distributions import Dist, HypothesisSet, InstanceMeta
from .flattening import FlattenMap
from .reduction import Transcript, UserPopulation
from .selection import SelectionResult

__version__ = "1.0.0"

__all__ = [
    "ComparatorOracle",
    "Config",
    "Dist",
    "FlattenMap",
    "HarnessConfig",
    "HypothesisSet",
    "InstanceMeta",
    "LayeredTournament",
    "LoggingConfig",
    "PrivacyConfig",
    "ScheffeConfig",
    "SelectionConfig",
    "SelectionResult",
    "Transcript",
    "UserPopulation",
]
