#!/usr/bin/env python3
"""
LDP Hypothesis Selection Simulator - Main Script
================================================

Point d'entrée en ligne de commande du simulateur de sélection d'hypothèses
sous confidentialité différentielle locale. Chaque sous-commande résout sa
configuration, exécute ses essais et écrit ses résultats.

Usage:
    python main.py {ni,hs,maxselect,game,flatten,calibrate} [options]

Codes de sortie:
    0 succès, 1 erreur inattendue, 2 configuration invalide, 3 instance infaisable
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.config import NOISE_MODES, Config
from src.exceptions import ConfigError, SelectionError
from src.flattening import build_flatten_map, flatten_hypotheses
from src.noninteractive import expected_scores
from src.harness import (
    ALGORITHMS,
    GENERATORS,
    STRATEGIES,
    ExperimentConfig,
    ExperimentResult,
    output_columns,
    prepare_instance,
    run_experiment,
)
from src.comparators import TIE_POLICIES
from src.distributions import InstanceMeta
from src.reduction import calibrate_comparison_constant
from src.storage import ReportWriter, emit_csv, emit_json, load_instance, save_instance, to_native

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None, log_format: Optional[str] = None) -> None:
    """Configure le système de logging (console + fichier si demandé)."""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format=log_format or "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="Graine maîtresse (défaut: config)")
    parser.add_argument("--trials", type=int, help="Nombre d'essais (défaut: config)")
    parser.add_argument("--out", help="Fichier de sortie (défaut: <output_dir>/<commande>_<graine>.<format>)")
    parser.add_argument("--format", choices=["csv", "json"], dest="output_format", help="Format de sortie")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Niveau de logging")
    parser.add_argument("--config", default="config.json", help="Fichier de configuration (défaut: config.json)")
    parser.add_argument("--workers", type=int, help="Processus parallèles pour les essais")
    parser.add_argument("--report", action="store_true", help="Écrire aussi un rapport Markdown")


def _add_instance_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", help="Fichier d'instance JSON")
    parser.add_argument("--generator", choices=GENERATORS, help="Générateur d'instance (défaut: random)")
    parser.add_argument("--k", type=int, help="Nombre d'hypothèses")
    parser.add_argument("--N", type=int, help="Taille de l'alphabet")
    parser.add_argument("--d", type=int, help="Dimension de l'instance difficile (alphabet 2^d)")
    parser.add_argument("--separation", type=float, help="Séparation deux à deux des hypothèses générées")
    parser.add_argument("--beta", type=float, help="Distance de p à Q (générateur agnostic)")
    parser.add_argument("--peak", type=float, help="Masse du pic (générateur peaked)")
    parser.add_argument("--save-instance", help="Écrire l'instance générée dans ce fichier")


def _add_privacy_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eps", type=float, dest="epsilon", help="Paramètre de confidentialité epsilon")
    parser.add_argument("--noise-mode", choices=NOISE_MODES, help="Échelle de Laplace: 2L/ε (strict) ou L/ε (paper, nominal)")


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse les arguments de ligne de commande."""
    parser = argparse.ArgumentParser(description="Simulateur de sélection d'hypothèses sous confidentialité locale")
    subparsers = parser.add_subparsers(dest="command", required=True)

    ni = subparsers.add_parser("ni", help="Protocole non interactif (log-vraisemblance bruitée)")
    _add_common_arguments(ni)
    _add_instance_arguments(ni)
    _add_privacy_arguments(ni)
    ni.add_argument("--n", type=int, help="Nombre total d'utilisateurs")
    ni.add_argument("--n-sweep", type=int, nargs="+", help="Balayage de valeurs de n")

    hs = subparsers.add_parser("hs", help="Sélection d'hypothèses interactive par tests de Scheffé privés")
    _add_common_arguments(hs)
    _add_instance_arguments(hs)
    _add_privacy_arguments(hs)
    hs.add_argument("--alpha", type=float, help="Précision visée alpha")
    hs.add_argument("--t", type=int, help="Nombre de tours")
    hs.add_argument("--n", type=int, help="Utilisateurs disponibles (défaut: pire cas planifié)")
    hs.add_argument("--algo", choices=["better", "naive"], help="Tournoi à t tours ou référence en un tour")
    hs.add_argument("--comparison-constant", type=float, help="Constante C par comparaison")
    hs.add_argument("--beta-fail", type=float, help="Probabilité d'échec tolérée")
    hs.add_argument("--h-constant", type=float, dest="reduction_h_constant", help="Constante de |H| du tournoi")

    maxselect = subparsers.add_parser("maxselect", help="Sélection du maximum face à un comparateur adversarial")
    _add_common_arguments(maxselect)
    maxselect.add_argument("--k", type=int, help="Nombre d'items")
    maxselect.add_argument("--t", type=int, help="Nombre de tours")
    maxselect.add_argument("--adversary", choices=TIE_POLICIES + ("tournament",), help="Adversaire")
    maxselect.add_argument("--values", choices=["spaced", "random", "clustered"], help="Valeurs cachées")
    maxselect.add_argument("--algo", choices=[a for a in ALGORITHMS if a != "naive"], help="Algorithme de tournoi")
    maxselect.add_argument("--h-constant", type=float, help="Constante de |H|")

    game = subparsers.add_parser("game", help="Jeu de borne inférieure contre la construction (k, t)")
    _add_common_arguments(game)
    game.add_argument("--k", type=int, help="Nombre de nœuds")
    game.add_argument("--t", type=int, help="Nombre de tours")
    game.add_argument("--budget", type=int, help="Requêtes maximales (défaut: C(k,2))")
    game.add_argument("--strategy", choices=STRATEGIES, help="Stratégie de l'algorithme")

    flatten = subparsers.add_parser("flatten", help="Aplatir une instance")
    flatten.add_argument("--instance", required=True, help="Fichier d'instance JSON")
    flatten.add_argument("--out", required=True, help="Fichier de sortie JSON")
    flatten.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Niveau de logging")
    flatten.add_argument("--config", default="config.json", help="Fichier de configuration")

    calibrate = subparsers.add_parser("calibrate", help="Calibrer la constante C d'une comparaison")
    _add_common_arguments(calibrate)
    _add_instance_arguments(calibrate)
    calibrate.add_argument("--eps", type=float, dest="epsilon", help="Paramètre de confidentialité epsilon")
    calibrate.add_argument("--alpha", type=float, help="Précision visée alpha")
    calibrate.add_argument("--beta-fail", type=float, help="Probabilité d'échec tolérée")
    calibrate.add_argument("--save-config", action="store_true", help="Enregistrer la constante dans la configuration")

    return parser.parse_args(argv)


def build_experiment_config(args: argparse.Namespace, config: Config) -> ExperimentConfig:
    """Fusionne les drapeaux CLI avec la configuration chargée (les drapeaux l'emportent)."""
    defaults = {
        "epsilon": config.privacy_config.epsilon,
        "noise_mode": config.privacy_config.noise_mode,
        "comparison_constant": config.scheffe_config.comparison_constant,
        "beta_fail": config.scheffe_config.beta_fail,
        "t": config.selection_config.rounds,
        "h_constant": config.selection_config.h_constant,
        "reduction_h_constant": config.scheffe_config.h_constant,
        "adversary": config.selection_config.adversary,
        "values": config.selection_config.values,
        "trials": config.harness_config.trials,
        "seed": config.harness_config.seed,
        "workers": config.harness_config.workers,
        "output_format": config.harness_config.output_format,
    }
    params: Dict[str, Any] = dict(defaults)
    for key, value in vars(args).items():
        if key in ("config", "log_level", "save_instance", "save_config", "n_sweep"):
            continue
        if value is not None and value is not False:
            params[key] = value
    if getattr(args, "n_sweep", None):
        params["n_sweep"] = args.n_sweep
    params["report"] = bool(getattr(args, "report", False))
    return ExperimentConfig.from_params(**params)


def resolve_output_path(experiment: ExperimentConfig, config: Config, suffix: Optional[str] = None) -> Path:
    if experiment.out:
        return Path(experiment.out)
    extension = suffix or experiment.output_format
    return Path(config.harness_config.output_dir) / f"{experiment.command}_{experiment.seed}.{extension}"


def emit_results(experiment: ExperimentConfig, result: ExperimentResult, config: Config) -> Path:
    """Écrit les enregistrements (CSV ou JSON) et, si demandé, le rapport Markdown."""
    path = resolve_output_path(experiment, config)
    records = result.record_dicts()
    if experiment.output_format == "json":
        extra = None
        if experiment.command == "ni":
            hypotheses, p, _ = prepare_instance(experiment)
            extra = {"expected_scores": expected_scores(hypotheses, p)}
        emit_json(
            records,
            path,
            config=experiment.model_dump(),
            summary=result.summary.to_dict(orient="records"),
            extra=extra,
        )
    else:
        emit_csv(records, path, columns=output_columns(experiment))
    if experiment.report:
        ReportWriter(path).write(experiment.command, experiment.model_dump(), result.summary, result.records)
    return path


def _maybe_save_instance(args: argparse.Namespace, experiment: ExperimentConfig) -> None:
    if getattr(args, "save_instance", None) and not experiment.instance:
        hypotheses, p, meta = prepare_instance(experiment)
        save_instance(args.save_instance, hypotheses, meta, p=p if meta.true_index is None else None)


def run_command(args: argparse.Namespace, config: Config) -> int:
    """Exécute ni, hs, maxselect ou game."""
    experiment = build_experiment_config(args, config)
    _maybe_save_instance(args, experiment)
    result = run_experiment(experiment)
    path = emit_results(experiment, result, config)
    if "success" in result.records.columns:
        logger.info(f"[OK] Taux de succès: {result.records['success'].mean():.3f}")
    if "sink_found" in result.records.columns:
        logger.info(f"[OK] Puits trouvé: {result.records['sink_found'].mean():.3f}")
    logger.info(f"[OK] Résultats écrits dans {path}")
    return EXIT_OK


def run_flatten(args: argparse.Namespace, config: Config) -> int:
    """Aplatit une instance et écrit l'instance aplatie avec la description des blocs."""
    hypotheses, _, meta = load_instance(args.instance)
    flatten_map = build_flatten_map(hypotheses)
    flattened = flatten_hypotheses(flatten_map, hypotheses)
    flat_meta = InstanceMeta(true_index=meta.true_index, separation=flattened.separation())
    save_instance(args.out, flattened, flat_meta, extra={"map": flatten_map.describe()})
    logger.info(f"[FLATTEN] N={flatten_map.source_size} → N'={flatten_map.target_size}, écrit dans {args.out}")
    return EXIT_OK


def run_calibrate(args: argparse.Namespace, config: Config) -> int:
    """Calibre la constante C puis l'écrit (JSON, et configuration si demandé)."""
    params = dict(vars(args))
    params["command"] = "hs"
    experiment = build_experiment_config(argparse.Namespace(**params), config)
    hypotheses, p, _ = prepare_instance(experiment)
    result = calibrate_comparison_constant(
        hypotheses,
        p,
        experiment.epsilon,
        experiment.alpha,
        experiment.beta_fail,
        seed=experiment.seed,
        trials=experiment.trials,
        gamma0=config.scheffe_config.gamma0,
    )
    path = Path(args.out) if args.out else Path(config.harness_config.output_dir) / f"calibrate_{experiment.seed}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_native({"config": experiment.model_dump(), "calibration": asdict(result)}), f, indent=2, ensure_ascii=False)
    logger.info(f"[OK] Constante calibrée C={result.constant:.4g} écrite dans {path}")
    if args.save_config:
        config.scheffe_config.comparison_constant = result.constant
        config.save_config()
    return EXIT_OK


COMMAND_HANDLERS = {
    "ni": run_command,
    "hs": run_command,
    "maxselect": run_command,
    "game": run_command,
    "flatten": run_flatten,
    "calibrate": run_calibrate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Fonction principale.

    Args:
        argv: Arguments (sys.argv[1:] par défaut)

    Returns:
        Code de sortie du processus
    """
    args = parse_arguments(argv)
    try:
        config = Config(args.config)
    except ConfigError as e:
        setup_logging(args.log_level or "INFO")
        logger.error(f"[CONFIG] {e}")
        return e.exit_code

    setup_logging(args.log_level or config.logging_config.level, config.logging_config.file, config.logging_config.format)
    logger.info(f"[START] Commande {args.command}")
    try:
        return COMMAND_HANDLERS[args.command](args, config)
    except SelectionError as e:
        logger.error(f"[ERREUR] {type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"[ERREUR] Erreur inattendue: {e}")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
