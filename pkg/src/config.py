"""
Configuration Module
===================

Module de configuration du simulateur de sélection d'hypothèses LDP.
Centralise les paramètres par défaut, le fichier config.json et les
variables d'environnement (chargées après load_dotenv).
"""

import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .exceptions import ConfigError

NOISE_MODES = ("strict", "paper", "nominal")
OUTPUT_FORMATS = ("csv", "json")
ADVERSARIES = ("favor_lower", "favor_higher", "uniform_random", "greedy_adaptive", "tournament")
VALUE_GENERATORS = ("spaced", "random", "clustered")


@dataclass
class PrivacyConfig:
    """Configuration des mécanismes de confidentialité locale."""
    epsilon: float = 1.0
    noise_mode: str = "strict"


@dataclass
class ScheffeConfig:
    """Configuration des comparaisons de Scheffé privées."""
    gamma0: float = 0.1
    comparison_constant: float = 50.0
    beta_fail: float = 0.1
    h_constant: float = 2.0


@dataclass
class SelectionConfig:
    """Configuration des tournois de sélection du maximum."""
    rounds: int = 3
    h_constant: float = 100.0
    adversary: str = "uniform_random"
    values: str = "spaced"


@dataclass
class HarnessConfig:
    """Configuration du banc d'expériences."""
    trials: int = 100
    seed: int = 0
    workers: int = 1
    output_dir: str = "output"
    output_format: str = "csv"


@dataclass
class LoggingConfig:
    """Configuration des journaux."""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file: str = "logs/ldp_hs.log"


def _default_config() -> Dict[str, Dict[str, Any]]:
    return {
        "privacy": asdict(PrivacyConfig()),
        "scheffe": asdict(ScheffeConfig()),
        "selection": asdict(SelectionConfig()),
        "harness": asdict(HarnessConfig()),
        "logging": asdict(LoggingConfig()),
    }


class Config:
    """
    Classe principale de configuration.

    Fusionne, dans cet ordre, les valeurs par défaut, le fichier JSON (s'il
    existe) et les variables d'environnement LDPHS_*.
    """

    ENV_OVERRIDES = {
        "LDPHS_EPSILON": ("privacy", "epsilon", float),
        "LDPHS_NOISE_MODE": ("privacy", "noise_mode", str),
        "LDPHS_SEED": ("harness", "seed", int),
        "LDPHS_TRIALS": ("harness", "trials", int),
        "LDPHS_WORKERS": ("harness", "workers", int),
        "LDPHS_LOG_LEVEL": ("logging", "level", str),
    }

    def __init__(self, config_file: Optional[str] = None):
        """
        Initialise la configuration.

        Args:
            config_file: Chemin vers le fichier de configuration JSON (optionnel)

        Raises:
            ConfigError: fichier illisible ou valeurs hors domaine
        """
        self.logger = logging.getLogger(__name__)
        self.config_file = config_file or "config.json"
        self._load_config()

    def _load_config(self):
        """Charge la configuration depuis les sources disponibles."""
        config = _default_config()

        if os.path.exists(self.config_file):
            try:
                with open(self.config_file, "r", encoding="utf-8") as f:
                    file_config = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"Erreur lors du chargement du fichier de config {self.config_file}: {e}") from e
            for section, values in file_config.items():
                if section not in config:
                    self.logger.warning(f"Section de configuration inconnue ignorée: {section}")
                    continue
                config[section].update(values)

        load_dotenv()
        self._load_from_environment(config)

        try:
            self.privacy_config = PrivacyConfig(**config["privacy"])
            self.scheffe_config = ScheffeConfig(**config["scheffe"])
            self.selection_config = SelectionConfig(**config["selection"])
            self.harness_config = HarnessConfig(**config["harness"])
            self.logging_config = LoggingConfig(**config["logging"])
        except TypeError as e:
            raise ConfigError(f"Clé de configuration inconnue: {e}") from e
        self.validate()

    def _load_from_environment(self, config: Dict[str, Any]):
        """Charge les paramètres depuis les variables d'environnement."""
        for variable, (section, key, cast) in self.ENV_OVERRIDES.items():
            raw = os.getenv(variable)
            if not raw:
                continue
            try:
                config[section][key] = cast(raw)
            except ValueError as e:
                raise ConfigError(f"Valeur invalide pour {variable}: {raw!r}") from e

    def validate(self):
        """Vérifie les domaines de valeurs."""
        if not 0 < self.privacy_config.epsilon <= 10:
            raise ConfigError(f"epsilon={self.privacy_config.epsilon} hors de ]0, 10]")
        if self.privacy_config.noise_mode not in NOISE_MODES:
            raise ConfigError(f"noise_mode inconnu: {self.privacy_config.noise_mode}")
        if not 0 < self.scheffe_config.beta_fail < 1:
            raise ConfigError(f"beta_fail={self.scheffe_config.beta_fail} hors de ]0, 1[")
        if min(self.scheffe_config.comparison_constant, self.scheffe_config.gamma0, self.scheffe_config.h_constant) <= 0:
            raise ConfigError("comparison_constant, gamma0 et h_constant doivent être strictement positifs")
        if self.selection_config.rounds < 1:
            raise ConfigError(f"rounds={self.selection_config.rounds} doit être ≥ 1")
        if self.selection_config.adversary not in ADVERSARIES:
            raise ConfigError(f"Adversaire inconnu: {self.selection_config.adversary}")
        if self.selection_config.values not in VALUE_GENERATORS:
            raise ConfigError(f"Générateur de valeurs inconnu: {self.selection_config.values}")
        if self.harness_config.trials < 1 or self.harness_config.workers < 1:
            raise ConfigError("trials et workers doivent être ≥ 1")
        if self.harness_config.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"Format de sortie inconnu: {self.harness_config.output_format}")

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return {
            "privacy": asdict(self.privacy_config),
            "scheffe": asdict(self.scheffe_config),
            "selection": asdict(self.selection_config),
            "harness": asdict(self.harness_config),
            "logging": asdict(self.logging_config),
        }

    def save_config(self, filename: Optional[str] = None):
        """
        Sauvegarde la configuration fusionnée dans un fichier.

        Args:
            filename: Nom du fichier de sauvegarde (optionnel)
        """
        filename = filename or self.config_file
        try:
            with open(filename, "w", encoding="utf-8") as f:
                json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
        except OSError as e:
            raise ConfigError(f"Erreur lors de la sauvegarde de la configuration: {e}") from e
        self.logger.info(f"[SAVE] Configuration sauvegardée dans {filename}")

    def __str__(self) -> str:
        return f"""LDP Hypothesis Selection Configuration:

Privacy:
  - Epsilon: {self.privacy_config.epsilon}
  - Noise mode: {self.privacy_config.noise_mode}

Scheffé:
  - gamma0: {self.scheffe_config.gamma0}
  - Comparison constant C: {self.scheffe_config.comparison_constant}
  - beta_fail: {self.scheffe_config.beta_fail}
  - |H| constant (reduction): {self.scheffe_config.h_constant}

Selection:
  - Rounds t: {self.selection_config.rounds}
  - |H| constant: {self.selection_config.h_constant}
  - Adversary: {self.selection_config.adversary}

Harness:
  - Trials: {self.harness_config.trials}
  - Seed: {self.harness_config.seed}
  - Workers: {self.harness_config.workers}
  - Output: {self.harness_config.output_dir} ({self.harness_config.output_format})
"""
