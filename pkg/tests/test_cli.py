import csv
import json

import pytest

from cldbs.cli import execute

FAST = {"metrics": {"t_sim": 5.0}}


def write_cfg(path, doc=None, **sections):
    doc = json.loads(json.dumps(doc or FAST))
    for k, v in sections.items():
        doc.setdefault(k, {}).update(v)
    path.write_text(json.dumps(doc))
    return str(path)


def run(capsys, *argv):
    code = execute(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        code, out, err = run(capsys, "frobnicate")
        assert code == 2 and out == "" and "usage" in err

    def test_unknown_flag(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", "--config", "x", "--out", str(tmp_path), "--bogus")
        assert code == 2 and "usage" in err

    def test_missing_required(self, capsys):
        assert run(capsys, "simulate")[0] == 2

    def test_missing_config(self, capsys, tmp_path):
        code, out, err = run(capsys, "simulate", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path))
        assert code == 1 and out == "" and "absent.json" in err

    def test_invalid_config_path_in_message(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "c.json", controller={"tau_m": -1})
        code, _, err = run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path / "o"))
        assert code == 1 and "controller.tau_m" in err


class TestSimulate:
    def test_outputs_and_determinism(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "c.json")
        code, out, _ = run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path / "a"))
        assert code == 0
        summary = json.loads(out)
        assert summary["controller"] == "onoff_lif"
        assert run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path / "b"))[0] == 0
        for name in ("trace.csv", "metrics.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_writes_only_under_out(self, capsys, tmp_path, monkeypatch):
        cfg = write_cfg(tmp_path / "c.json", output={"plots": True})
        work = tmp_path / "cwd"
        work.mkdir()
        monkeypatch.chdir(work)
        assert run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path / "o"))[0] == 0
        assert list(work.iterdir()) == []
        assert sorted(p.name for p in (tmp_path / "o" / "plots").iterdir()) == [
            "amplitude.svg", "arv.svg", "trace_columns.svg"]


class TestCompare:
    def test_four_rows(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "c.json")
        code, out, _ = run(capsys, "compare", "--config", cfg, "--out", str(tmp_path / "o"))
        assert code == 0 and json.loads(out)["rows"] == 4
        with open(tmp_path / "o" / "comparison.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["controller"] for r in rows] == ["dbs_off", "open_loop", "onoff_lif", "dual_lif"]
        assert {"mse_pct", "power_pct", "efficiency_std"} <= set(rows[0])
        assert float(rows[0]["mse_pct"]) == 100.0
        assert float(rows[1]["power_pct"]) == pytest.approx(100.0)

    def test_seeds(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "c.json", output={"trace": False})
        code, out, _ = run(capsys, "compare", "--config", cfg, "--out", str(tmp_path / "o"), "--seeds", "1", "2")
        assert code == 0 and json.loads(out)["rows"] == 8
        assert not (tmp_path / "o" / "traces").exists()

    def test_plot_comparison(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "c.json", output={"trace": False})
        run(capsys, "compare", "--config", cfg, "--out", str(tmp_path / "o"))
        code, out, _ = run(capsys, "plot", "--run", str(tmp_path / "o" / "comparison.csv"), "--out", str(tmp_path / "p"))
        assert code == 0
        assert sorted(p.name for p in (tmp_path / "p").iterdir()) == ["efficiency_std.svg", "mse_pct.svg", "power_pct.svg"]


class TestOther:
    def test_sweep(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "c.json")
        code, out, _ = run(capsys, "sweep", "--param", "controller.gain", "--values", "0.5", "2",
                           "--config", cfg, "--out", str(tmp_path / "o"))
        assert code == 0
        lines = (tmp_path / "o" / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("controller.gain,controller") and len(lines) == 3

    def test_sweep_bad_param(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "c.json")
        code, _, err = run(capsys, "sweep", "--param", "controller.nope", "--values", "1",
                           "--config", cfg, "--out", str(tmp_path / "o"))
        assert code == 1 and "controller.nope" in err

    def test_gen_dataset(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "s.json", dataset={"severities": ["healthy", "severe"], "seeds": [0]})
        code, out, _ = run(capsys, "gen-dataset", "--spec", cfg, "--out", str(tmp_path / "d"))
        assert code == 0 and json.loads(out)["runs"] == 4
        assert (tmp_path / "d" / "manifest.json").is_file()

    def test_plot_run_has_dual_targets(self, capsys, tmp_path):
        cfg = write_cfg(tmp_path / "c.json", controller={"kind": "dual_lif"})
        run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path / "o"))
        code, _, _ = run(capsys, "plot", "--run", str(tmp_path / "o" / "trace.csv"), "--out", str(tmp_path / "p"))
        assert code == 0
        svg = (tmp_path / "p" / "arv.svg").read_text()
        assert "0.104 uV" in svg and "0.05207 uV" in svg

    def test_plot_bad_file(self, capsys, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n1,2\n")
        assert run(capsys, "plot", "--run", str(p), "--out", str(tmp_path / "p"))[0] == 1
        assert run(capsys, "plot", "--run", str(tmp_path / "none.csv"), "--out", str(tmp_path / "p"))[0] == 1

    def test_empty_comparison(self, tmp_path):
        from cldbs.plots import plot_comparison
        with pytest.raises(ValueError):
            plot_comparison([], tmp_path)
