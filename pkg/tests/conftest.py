"""
Plugin pytest et fixtures partagées
===================================

Plugin de journalisation des résultats de tests dans tests/logs/
et fixtures communes (générateurs aléatoires, petites instances).
"""

import logging
import time
from datetime import datetime
from pathlib import Path

import numpy as np
import pytest

from src.distributions import gen_peaked_instance, make_dist, HypothesisSet


def setup_test_logging() -> logging.Logger:
    """Configure un logger fichier horodaté pour la session de tests."""
    logs_dir = Path(__file__).parent / "logs"
    logs_dir.mkdir(exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")

    logger = logging.getLogger("test_session")
    logger.setLevel(logging.INFO)
    logger.propagate = False
    handler = logging.FileHandler(logs_dir / f"test_run_{timestamp}.log", encoding="utf-8")
    handler.setFormatter(logging.Formatter(
        "%(asctime)s | %(levelname)-8s | %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
    ))
    logger.addHandler(handler)
    return logger


class TestResultsPlugin:
    """Plugin pytest pour logger les résultats des tests."""

    __test__ = False

    def __init__(self):
        self.logger = setup_test_logging()
        self.session_start_time = None
        self.stats = {"passed": 0, "failed": 0, "skipped": 0}

    def pytest_sessionstart(self, session):
        self.session_start_time = time.time()
        self.logger.info("=" * 80)
        self.logger.info("DÉBUT DE LA SESSION DE TESTS")
        self.logger.info("=" * 80)

    def pytest_sessionfinish(self, session, exitstatus):
        duration = time.time() - self.session_start_time if self.session_start_time else 0
        self.logger.info("=" * 80)
        self.logger.info(
            f"FIN DE LA SESSION: {self.stats['passed']} réussis, {self.stats['failed']} échecs, "
            f"{self.stats['skipped']} ignorés"
        )
        self.logger.info(f"   Durée totale: {duration:.2f} secondes")
        self.logger.info(f"   Code de sortie: {exitstatus}")
        self.logger.info("=" * 80)

    def pytest_collection_modifyitems(self, config, items):
        self.logger.info(f"{len(items)} tests collectés")
        modules = {}
        for item in items:
            modules.setdefault(item.module.__name__, []).append(item.name)
        for module, tests in modules.items():
            self.logger.info(f"   {module}: {len(tests)} tests")

    def pytest_runtest_logreport(self, report):
        test_name = report.nodeid.split("::")[-1]
        duration = getattr(report, "duration", 0)

        if report.outcome == "failed":
            self.stats["failed"] += 1
            error_msg = str(report.longrepr) if report.longrepr else "Erreur inconnue"
            if len(error_msg) > 500:
                error_msg = error_msg[:500] + "... (tronqué)"
            self.logger.error(f"[ÉCHEC] {test_name} ({report.when}, {duration:.3f}s): {error_msg}")
        elif report.when == "call" and report.outcome == "passed":
            self.stats["passed"] += 1
            self.logger.info(f"[OK] {test_name} ({duration:.3f}s)")
        elif report.outcome == "skipped":
            self.stats["skipped"] += 1
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else "Raison inconnue"
            self.logger.info(f"[SKIP] {test_name}: {reason}")


def pytest_configure(config):
    """Configure le plugin pytest."""
    config.pluginmanager.register(TestResultsPlugin(), "test_results_logger")


@pytest.fixture
def rng():
    """Générateur déterministe pour un test."""
    return np.random.default_rng(12345)


@pytest.fixture
def peaked_instance():
    """Quatre hypothèses sur 4 symboles, masse 0.7 sur le symbole i."""
    return gen_peaked_instance(4, 4, 0.7)


@pytest.fixture
def two_point_set():
    """Deux hypothèses à distance de variation totale 0.4."""
    return HypothesisSet((make_dist([0.7, 0.3]), make_dist([0.3, 0.7])))
