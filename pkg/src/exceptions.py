"""
Exceptions Module
=================

Hiérarchie d'exceptions du simulateur de sélection d'hypothèses LDP.
Chaque famille d'erreur correspond à un code de sortie de la ligne de commande.
"""


class SelectionError(Exception):
    """Classe de base de toutes les erreurs du simulateur."""

    exit_code = 1


class InvalidDistributionError(SelectionError, ValueError):
    """Vecteur de probabilités invalide, alphabets incompatibles ou indice hors domaine."""

    exit_code = 2


class ConfigError(SelectionError):
    """Paramètres ou configuration invalides."""

    exit_code = 2


class InfeasibleInstanceError(SelectionError):
    """Instance impossible à construire ou à traiter avec les paramètres demandés."""

    exit_code = 3


class ProtocolViolationError(SelectionError):
    """Un message utilisateur viole les hypothèses du protocole (masse nulle, L trop petit)."""


class PrivacyViolationError(SelectionError):
    """Le registre de confidentialité détecte une double participation ou un dépassement de budget."""


class InsufficientSamplesError(SelectionError):
    """La population d'utilisateurs est épuisée avant la fin du protocole."""

    exit_code = 3

    def __init__(self, requested: int, available: int):
        self.requested = requested
        self.available = available
        self.shortfall = requested - available
        super().__init__(
            f"Population épuisée: {requested} utilisateurs demandés, "
            f"{available} disponibles (manque {self.shortfall})"
        )


class ResultsError(SelectionError):
    """Échec d'émission des résultats (aucun enregistrement, fichier non inscriptible)."""
