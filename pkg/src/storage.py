"""
Storage Module
==============

Lecture et écriture des fichiers d'instance, émission des résultats
d'expérience en CSV / JSON et rapport Markdown.

Classes:
    InstanceFile: Schéma pydantic d'un fichier d'instance
    ReportWriter: Rédaction du rapport Markdown d'une exécution
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from .distributions import Dist, HypothesisSet, InstanceMeta, make_dist
from .exceptions import ConfigError, InvalidDistributionError, ResultsError

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.10g"

RECORD_COLUMNS = {
    "ni": ["trial", "n", "chosen", "true", "success", "L", "Nprime"],
    "hs": ["trial", "n_used", "rounds", "chosen", "achieved_tv", "beta", "factor"],
    "maxselect": ["trial", "k", "t", "adversary", "winner", "winner_value", "max_value", "queries", "rounds", "success"],
    "game": ["trial", "k", "t", "budget", "strategy", "guess", "sink", "queries", "rounds", "sink_found"],
}


class InstanceFile(BaseModel):
    """
    Fichier d'instance: {"domain_size", "hypotheses", "true_index"?, "alpha"?, "p"?}.

    Les vecteurs sont renormalisés au chargement.
    """

    domain_size: int = Field(ge=1)
    hypotheses: List[List[float]] = Field(min_length=1)
    true_index: Optional[int] = None
    alpha: Optional[float] = None
    p: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_shapes(self):
        for i, weights in enumerate(self.hypotheses):
            if len(weights) != self.domain_size:
                raise ValueError(f"hypothèse {i}: {len(weights)} poids pour domain_size={self.domain_size}")
        if self.p is not None and len(self.p) != self.domain_size:
            raise ValueError(f"p: {len(self.p)} poids pour domain_size={self.domain_size}")
        if self.true_index is not None and not 0 <= self.true_index < len(self.hypotheses):
            raise ValueError(f"true_index={self.true_index} hors de [0, {len(self.hypotheses)})")
        return self


def to_native(data):
    """Convertit récursivement les types numpy en types Python natifs (NaN → None)."""
    if isinstance(data, dict):
        return {str(key): to_native(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [to_native(item) for item in data]
    if isinstance(data, np.ndarray):
        return to_native(data.tolist())
    if isinstance(data, np.integer):
        return int(data)
    if isinstance(data, (np.floating, float)):
        value = float(data)
        return None if np.isnan(value) else value
    if isinstance(data, np.bool_):
        return bool(data)
    return data


def load_instance(path) -> Tuple[HypothesisSet, Optional[Dist], InstanceMeta]:
    """
    Charge un fichier d'instance.

    Returns:
        (Q, p si présent, métadonnées)

    Raises:
        ConfigError: fichier illisible ou schéma invalide
        InvalidDistributionError: poids négatifs ou vecteur nul
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Fichier d'instance illisible {path}: {e}") from e
    try:
        instance = InstanceFile.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Fichier d'instance invalide {path}: {e}") from e

    hypotheses = HypothesisSet(tuple(make_dist(weights) for weights in instance.hypotheses))
    p = make_dist(instance.p) if instance.p is not None else None
    if p is None and instance.true_index is not None:
        p = hypotheses[instance.true_index]
    meta = InstanceMeta(true_index=instance.true_index, separation=instance.alpha)
    logger.info(f"[LOAD] Instance {path}: k={hypotheses.k}, N={hypotheses.alphabet_size}")
    return hypotheses, p, meta


def save_instance(
    path,
    hypotheses: HypothesisSet,
    meta: Optional[InstanceMeta] = None,
    p: Optional[Dist] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Écrit une instance au format de load_instance (rejouable); `extra` ajoute des clés ignorées au chargement."""
    meta = meta or InstanceMeta()
    payload = {
        "domain_size": hypotheses.alphabet_size,
        "hypotheses": hypotheses.matrix.tolist(),
        "true_index": meta.true_index,
        "alpha": meta.separation if meta.separation is not None and np.isfinite(meta.separation) else None,
    }
    if p is not None:
        payload["p"] = p.weights.tolist()
    if extra:
        payload.update(to_native(extra))
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
    except OSError as e:
        raise ResultsError(f"Écriture de l'instance impossible {path}: {e}") from e
    logger.info(f"[SAVE] Instance sauvegardée dans {path}")
    return path


def emit_csv(records: Sequence[Dict[str, Any]], path, columns: Optional[List[str]] = None) -> Path:
    """
    Écrit les enregistrements en CSV avec un en-tête fixe.

    Raises:
        ResultsError: aucun enregistrement (aucun fichier créé) ou écriture impossible
    """
    if not records:
        raise ResultsError("Aucun enregistrement à écrire")
    frame = pd.DataFrame(list(records))
    if columns is not None:
        frame = frame.reindex(columns=columns)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    except OSError as e:
        raise ResultsError(f"Écriture CSV impossible {path}: {e}") from e
    logger.info(f"[SAVE] {len(frame)} enregistrements écrits dans {path}")
    return path


def emit_json(
    records: Sequence[Dict[str, Any]],
    path,
    config: Optional[Dict[str, Any]] = None,
    summary: Optional[List[Dict[str, Any]]] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Écrit {"config", "summary", "records"} en JSON, avec l'écho de la configuration.

    Raises:
        ResultsError: aucun enregistrement ou écriture impossible
    """
    if not records:
        raise ResultsError("Aucun enregistrement à écrire")
    payload = {"config": config or {}, "summary": summary or [], "records": list(records)}
    if extra:
        payload.update(extra)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(to_native(payload), f, indent=2, ensure_ascii=False, default=str)
    except OSError as e:
        raise ResultsError(f"Écriture JSON impossible {path}: {e}") from e
    logger.info(f"[SAVE] Résultats JSON sauvegardés dans {path}")
    return path


class ReportWriter:
    """Rapport Markdown d'une exécution: configuration, résumé et statistiques."""

    def __init__(self, output_path):
        self.output_path = Path(output_path)
        self.logger = logging.getLogger(__name__)

    def report_path(self) -> Path:
        return self.output_path.with_name(f"{self.output_path.stem}_rapport.md")

    def write(self, command: str, config: Dict[str, Any], summary: pd.DataFrame, records: pd.DataFrame) -> Path:
        """
        Génère le rapport complet.

        Args:
            command: Sous-commande exécutée
            config: Configuration résolue
            summary: Tableau de synthèse (moyenne, erreur standard, quantiles)
            records: Enregistrements par essai
        """
        path = self.report_path()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                f.write(f"# RAPPORT D'EXÉCUTION - {command.upper()}\n\n")
                f.write(f"*Généré le {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}*\n\n---\n\n")
                self._write_config(f, config)
                self._write_summary(f, summary)
                self._write_outcomes(f, command, records)
        except OSError as e:
            raise ResultsError(f"Écriture du rapport impossible {path}: {e}") from e
        self.logger.info(f"[SAVE] Rapport Markdown sauvegardé dans {path}")
        return path

    def _write_config(self, f, config: Dict[str, Any]) -> None:
        f.write("## Configuration\n\n| Paramètre | Valeur |\n|---|---|\n")
        for key, value in to_native(config).items():
            f.write(f"| {key} | {value} |\n")
        f.write("\n")

    def _write_summary(self, f, summary: pd.DataFrame) -> None:
        f.write("## Synthèse\n\n")
        if summary.empty:
            f.write("Aucune statistique disponible.\n\n")
            return
        columns = list(summary.columns)
        f.write("| " + " | ".join(columns) + " |\n")
        f.write("|" + "---|" * len(columns) + "\n")
        for _, row in summary.iterrows():
            cells = [f"{v:.4g}" if isinstance(v, (float, np.floating)) else str(v) for v in row.tolist()]
            f.write("| " + " | ".join(cells) + " |\n")
        f.write("\n")

    def _write_outcomes(self, f, command: str, records: pd.DataFrame) -> None:
        f.write("## Résultats par essai\n\n")
        f.write(f"- Nombre d'essais: {len(records)}\n")
        for flag in ("success", "sink_found"):
            if flag in records.columns:
                rate = records[flag].astype(float).mean()
                f.write(f"- Taux de {flag}: {rate:.3f}\n")
        for metric in ("queries", "rounds", "n_used", "achieved_tv"):
            if metric in records.columns:
                f.write(f"- {metric}: moyenne {records[metric].mean():.4g}, max {records[metric].max():.4g}\n")
        f.write("\n")
