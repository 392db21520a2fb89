"""
Tests pour le module storage
============================

Fichiers d'instance, émission CSV / JSON et rapport Markdown.
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.distributions import InstanceMeta, gen_peaked_instance, make_dist
from src.exceptions import ConfigError, InvalidDistributionError, ResultsError
from src.storage import RECORD_COLUMNS, ReportWriter, emit_csv, emit_json, load_instance, save_instance, to_native


def write_json(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


@pytest.mark.unit
class TestLoadInstance:
    """Tests pour load_instance."""

    def test_renormalizes(self, tmp_path):
        path = write_json(tmp_path / "inst.json", {
            "domain_size": 2,
            "hypotheses": [[1, 1], [1, 3]],
            "true_index": 1,
            "alpha": 0.25,
        })
        Q, p, meta = load_instance(path)
        assert np.allclose(Q.matrix, [[0.5, 0.5], [0.25, 0.75]])
        assert p is Q[1]
        assert meta.true_index == 1
        assert meta.separation == 0.25

    def test_explicit_p(self, tmp_path):
        path = write_json(tmp_path / "inst.json", {
            "domain_size": 2,
            "hypotheses": [[0.5, 0.5]],
            "p": [0.2, 0.8],
        })
        _, p, meta = load_instance(path)
        assert np.allclose(p.weights, [0.2, 0.8])
        assert meta.true_index is None

    def test_no_target(self, tmp_path):
        path = write_json(tmp_path / "inst.json", {"domain_size": 1, "hypotheses": [[1.0]]})
        _, p, _ = load_instance(path)
        assert p is None

    @pytest.mark.parametrize("payload", [
        {"domain_size": 3, "hypotheses": [[0.5, 0.5]]},
        {"domain_size": 2, "hypotheses": []},
        {"domain_size": 2, "hypotheses": [[0.5, 0.5]], "true_index": 3},
        {"hypotheses": [[0.5, 0.5]]},
    ])
    def test_invalid_schema(self, tmp_path, payload):
        with pytest.raises(ConfigError):
            load_instance(write_json(tmp_path / "inst.json", payload))

    def test_negative_weight(self, tmp_path):
        path = write_json(tmp_path / "inst.json", {"domain_size": 2, "hypotheses": [[-1, 2]]})
        with pytest.raises(InvalidDistributionError):
            load_instance(path)

    def test_unreadable(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_instance(path)
        with pytest.raises(ConfigError):
            load_instance(tmp_path / "missing.json")


@pytest.mark.unit
class TestSaveInstance:
    """Tests pour save_instance."""

    def test_replayable(self, tmp_path):
        Q, meta = gen_peaked_instance(3, 5, 0.6)
        path = save_instance(tmp_path / "out" / "inst.json", Q, InstanceMeta(true_index=2, separation=meta.separation))
        Q2, p, meta2 = load_instance(path)
        assert np.allclose(Q2.matrix, Q.matrix)
        assert meta2.true_index == 2
        assert p is Q2[2]

    def test_extra_keys_and_p(self, tmp_path):
        Q, _ = gen_peaked_instance(2, 3, 0.6)
        path = save_instance(tmp_path / "inst.json", Q, p=make_dist([1, 1, 1]), extra={"map": {"blocks": np.array([[0, 1]])}})
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["map"]["blocks"] == [[0, 1]]
        assert payload["alpha"] is None
        _, p, _ = load_instance(path)
        assert np.allclose(p.weights, 1 / 3)


@pytest.mark.unit
class TestEmit:
    """Tests pour emit_csv et emit_json."""

    def test_csv_header_order(self, tmp_path):
        records = [{"trial": 0, "n": 10, "chosen": 1, "true": 1, "success": 1, "L": 0.5, "Nprime": 12}]
        path = emit_csv(records, tmp_path / "ni.csv", columns=RECORD_COLUMNS["ni"])
        frame = pd.read_csv(path)
        assert list(frame.columns) == RECORD_COLUMNS["ni"]

    def test_csv_empty(self, tmp_path):
        with pytest.raises(ResultsError):
            emit_csv([], tmp_path / "empty.csv")
        assert not (tmp_path / "empty.csv").exists()

    def test_json_payload(self, tmp_path):
        records = [{"trial": np.int64(0), "value": np.float64(np.nan)}]
        path = emit_json(records, tmp_path / "r.json", config={"seed": 1}, summary=[{"x_mean": 0.5}])
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["config"] == {"seed": 1}
        assert payload["records"] == [{"trial": 0, "value": None}]
        assert payload["summary"][0]["x_mean"] == 0.5

    def test_json_empty(self, tmp_path):
        with pytest.raises(ResultsError):
            emit_json([], tmp_path / "r.json")

    def test_to_native(self):
        data = {"a": np.array([1, 2]), "b": (np.bool_(True), np.float32(1.5)), 3: np.int8(4)}
        assert to_native(data) == {"a": [1, 2], "b": [True, 1.5], "3": 4}


@pytest.mark.unit
class TestReportWriter:
    """Tests pour ReportWriter."""

    def test_report(self, tmp_path):
        records = pd.DataFrame({"trial": [0, 1], "success": [1, 0], "queries": [5, 7], "rounds": [2, 2]})
        summary = pd.DataFrame({"group": ["all"], "success_mean": [0.5]})
        writer = ReportWriter(tmp_path / "maxselect_0.csv")
        path = writer.write("maxselect", {"k": 5, "t": 2}, summary, records)
        assert path.name == "maxselect_0_rapport.md"
        content = path.read_text(encoding="utf-8")
        assert "MAXSELECT" in content
        assert "| k | 5 |" in content
        assert "Taux de success: 0.500" in content
