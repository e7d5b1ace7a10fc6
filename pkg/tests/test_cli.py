import csv
import io
import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from adiabatic_search.cli import dumps_json, fmt, main

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "schema.json").read_text())


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) if v else None for v in r] for r in rows[1:]]


def column(text, name):
    header, rows = table(text)
    j = header.index(name)
    return np.array([r[j] for r in rows])


def run_json(*argv):
    code, out, err = run(*argv, "--format", "json")
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return doc


class TestFormatting:
    def test_fmt(self):
        assert fmt(0.1) == "0.10000000000000001"
        assert fmt(3) == "3" and fmt(None) == "" and fmt(True) == "true"
        assert fmt(float("nan")) == "nan"

    def test_json_roundtrip(self):
        text = dumps_json({"x": 0.1, "y": float("inf"), "z": np.arange(2)})
        assert '"x": 0.10000000000000001' in text
        assert json.loads(text) == {"x": 0.1, "y": None, "z": [0, 1]}


class TestSpectrum:
    def test_small_example(self):
        code, out, _ = run("spectrum", "--n", 4, "--a", 0, "--samples", 3)
        assert code == 0
        header, rows = table(out)
        assert header == ["s", "f", "g", "E_minus", "E_plus", "omega", "M"]
        np.testing.assert_allclose(column(out, "s"), [0, 0.5, 1])
        np.testing.assert_allclose(column(out, "E_minus"), [0, 0.25, 0], atol=1e-15)
        assert out.count("\n") == 4 and "\r" not in out

    def test_invariants(self):
        code, out, _ = run("spectrum", "--n", 1000, "--alpha", 0.5, "--samples", 201)
        e = column(out, "E_minus")
        assert e[0] == 0 and e[-1] == 0
        assert np.all(column(out, "omega") > 0)

    def test_json(self):
        doc = run_json("spectrum", "--n", 16, "--a", 2)
        assert doc["columns"][0] == "s" and len(doc["rows"]) == 101


class TestTmin:
    def test_linear_closed_form(self):
        code, out, _ = run("tmin", "--n", 101, "--a", 0)
        assert code == 0
        header, rows = table(out)
        assert header == ["N", "alpha", "A", "eps_Tmin"]
        assert rows[0][3] == pytest.approx(10.0, rel=1e-9)
        assert rows[0][1] is None

    def test_constant_time(self):
        doc = run_json("tmin", "--n", 100000, "--alpha", 0.5)
        assert doc["eps_Tmin"] == pytest.approx(1 + math.pi / 2, rel=0.01)
        assert doc["constant_time_limit"] == 1 + math.pi / 2

    def test_scan(self):
        code, out, _ = run("scan", "--n", "100,10000", "--alpha", "0,0.5")
        assert code == 0
        _, rows = table(out)
        assert [(r[0], r[1]) for r in rows] == [(100, 0), (100, 0.5), (10000, 0), (10000, 0.5)]
        run_json("scan", "--n", "100,10000", "--alpha", "0,0.5")

    def test_scan_workers_identical(self):
        a = run("scan", "--n", "100,1000", "--alpha", "0.25,0.5")[1]
        b = run("scan", "--n", "100,1000", "--alpha", "0.25,0.5", "--workers", 2)[1]
        assert a == b


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ("tmin", "--n", 100, "--a", 1, "--alpha", 0.5),
        ("tmin", "--n", 1, "--a", 0),
        ("tmin", "--n", 100, "--eps", 1.5),
        ("spectrum", "--n", 10, "--a", -1),
        ("evolve", "--n", 16, "--shift-ground"),
        ("evolve", "--n", 5000, "--engine", "full"),
        ("audit", "--n", 300),
        ("scan", "--n", "100", "--alpha", "-1"),
        ("nonsense",),
        ("tmin", "--config", "/nonexistent/file.cfg"),
    ])
    def test_invalid(self, argv):
        assert run(*argv)[0] == 2

    def test_numerical_failure(self, monkeypatch):
        import adiabatic_search.cli as cli

        def boom(*a, **k):
            raise ArithmeticError("no")

        monkeypatch.setattr(cli, "synthesize", boom)
        code, _, err = run("evolve", "--n", 16)
        assert code == 1 and "numerical failure" in err

    def test_all_rows_fail(self, monkeypatch):
        import adiabatic_search.scheduler as sched_mod

        def boom(*a, **k):
            raise ArithmeticError("no")

        monkeypatch.setattr(sched_mod, "t_min", boom)
        assert run("scan", "--n", "100,200", "--alpha", "0.5")[0] == 1


class TestDeterminism:
    def test_byte_identical(self, tmp_path):
        outs = []
        for k in range(2):
            out, summ = tmp_path / f"o{k}.csv", tmp_path / f"s{k}.json"
            code, _, _ = run("evolve", "--n", 64, "--a", 8, "--eps", 0.05, "--samples", 50,
                             "--out", out, "--summary", summ)
            assert code == 0
            outs.append((out.read_bytes(), summ.read_bytes()))
        assert outs[0] == outs[1]
        summary = json.loads(outs[0][1])
        jsonschema.validate(summary, SCHEMA)
        assert b"\r" not in outs[0][0]

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nn = 101\na = 0\neps = 0.5\n")
        doc = run_json("--config", cfg, "tmin", "--eps", 0.01)
        assert doc["config"]["eps"] == 0.01 and doc["config"]["n"] == 101
        assert doc["T_min"] == pytest.approx(1000.0, rel=1e-9)

    def test_config_flags(self, tmp_path):
        cfg = tmp_path / "q.cfg"
        cfg.write_text("n=16\nsudden=true\n")
        doc = run_json("--config", cfg, "audit")
        assert doc["config"]["sudden"] is True
        assert doc["lhs_sum"] <= 1e-9

    def test_bad_config_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n 16\n")
        assert run("--config", cfg, "tmin")[0] == 2


class TestEvolve:
    def test_full_matches_reduced(self):
        base = ("evolve", "--n", 64, "--a", 8, "--eps", 0.05, "--samples", 100)
        red = column(run(*base)[1], "P_minus")
        full = column(run(*base, "--engine", "full", "--mark", 5)[1], "P_minus")
        assert np.max(np.abs(red - full)) <= 1e-6

    def test_shift_ground(self):
        base = ("evolve", "--n", 64, "--a", 8, "--eps", 0.05, "--samples", 100,
                "--engine", "full")
        a = column(run(*base)[1], "P_minus")
        b = column(run(*base, "--shift-ground")[1], "P_minus")
        assert np.max(np.abs(a - b)) <= 1e-8

    def test_summary(self):
        doc = run_json("evolve", "--n", 1000, "--alpha", 0.5, "--eps", 0.01, "--samples", 20)
        assert doc["columns"] == ["t", "s", "P_minus", "E_minus", "omega"]
        assert doc["success"] and doc["final_fidelity"] >= 1 - 10 * 0.01**2
        assert doc["final_eps_t"] == pytest.approx(0.01 * doc["T"])
        assert doc["max_norm_drift"] <= 1e-9

    def test_sudden(self):
        doc = run_json("evolve", "--n", 100, "--sudden", "--samples", 5)
        assert doc["final_fidelity"] == pytest.approx(0.01, abs=1e-9)
        assert not doc["success"]


class TestAudit:
    def test_successful(self):
        doc = run_json("audit", "--n", 64, "--a", 0, "--eps", 0.05)
        assert doc["pass_time5"] and doc["pass_bound"]
        assert doc["sqrt_n_over_4"] == 2.0 and doc["oracle_action"] > 0
        assert len(doc["rows"]) == 64 and doc["columns"][:2] == ["m", "m0"]

    def test_quench_csv(self, tmp_path):
        summ = tmp_path / "a.json"
        code, out, _ = run("audit", "--n", 16, "--sudden", "--summary", summ)
        assert code == 0
        header, rows = table(out)
        assert len(header) == 17 and len(rows) == 16
        doc = json.loads(summ.read_text())
        jsonschema.validate(doc, SCHEMA)
        assert doc["lhs_sum"] <= 1e-9 and doc["pass_time5"]
