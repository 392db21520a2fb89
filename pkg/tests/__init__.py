# Fichier __init__.py pour le package tests
"""
Tests Package
=============

Package contenant les tests du simulateur de sélection d'hypothèses LDP.

Structure des tests:
    - test_distributions.py: Distributions, distances et générateurs
    - test_flattening.py: Application d'aplatissement
    - test_mechanisms.py: Mécanismes de confidentialité et registre
    - test_noninteractive.py: Protocole non interactif
    - test_scheffe.py: Tests de Scheffé
    - test_comparators.py: Oracles de comparaison
    - test_selection.py: Tournois de sélection du maximum
    - test_reduction.py: Réduction vers la sélection d'hypothèses
    - test_storage.py: Fichiers d'instance et résultats
    - test_harness.py: Banc d'expériences et jeu de borne inférieure
    - test_config.py: Configuration
    - test_main.py: Interface en ligne de commande
    - test_pipeline_e2e.py: Scénarios complets

Utilisation:
    pytest tests/
    pytest tests/test_selection.py
    pytest tests/ -m "not slow"  # sans les tests longs
    pytest tests/ -k "test_name"  # exécuter des tests spécifiques
"""

__version__ = "1.0.0"
