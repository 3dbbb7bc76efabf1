"""End-to-end tests for the command-line client.

Every test drives main(argv) in process; the CLI talks to an in-process
copy of the HTTP app, so these cover the full config -> service ->
artifact path including exit codes.
"""
import json

import pytest

from dirac_darboux.cli import main

SMALL_GRID = {"x_min": -15.0, "x_max": 15.0, "n_points": 1501}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def fig1_doc():
    return {
        "name": "fig1",
        "kind": "darboux2x2",
        "v": -2.0,
        "w": 5.0,
        "re_a": 0.0,
        "im_a": 0.0,
        "eps1": -1.0,
        "eps2": 2.0,
        "delta1": 0.0,
        "delta2": 0.0,
        "grid": dict(SMALL_GRID),
    }


class TestBuild:
    def test_writes_artifacts_and_exits_zero(self, tmp_path, capsys):
        cfg = write_config(tmp_path, fig1_doc())
        out_dir = tmp_path / "out"
        code = main(["build", cfg, "--out-dir", str(out_dir)])
        assert code == 0
        for name in ("potentials.csv", "bound_states.csv", "model.json"):
            assert (out_dir / name).is_file()
        doc = json.loads((out_dir / "model.json").read_text())
        assert doc["name"] == "fig1"
        captured = capsys.readouterr()
        assert "built fig1 (darboux2x2): 2 bound state(s)" in captured.out

    def test_default_out_dir_is_cwd(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, fig1_doc())
        work = tmp_path / "work"
        work.mkdir()
        monkeypatch.chdir(work)
        assert main(["build", cfg]) == 0
        assert (work / "model.json").is_file()

    def test_rebuild_is_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, fig1_doc())
        dirs = (tmp_path / "a", tmp_path / "b")
        for d in dirs:
            assert main(["build", cfg, "--out-dir", str(d)]) == 0
        for name in ("potentials.csv", "bound_states.csv", "model.json"):
            assert (dirs[0] / name).read_bytes() == \
                (dirs[1] / name).read_bytes()

    def test_missing_config_file_exits_2(self, tmp_path, capsys):
        code = main(["build", str(tmp_path / "nope.json")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_json_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["build", str(path)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_unknown_kind_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"name": "x", "kind": "warp"})
        assert main(["build", cfg]) == 2
        assert "error:" in capsys.readouterr().err

    def test_unknown_field_exits_2(self, tmp_path):
        doc = fig1_doc()
        doc["volume"] = 11
        cfg = write_config(tmp_path, doc)
        assert main(["build", cfg]) == 2

    def test_node_forming_seed_exits_3(self, tmp_path, capsys):
        # this energy pair violates the no-node condition, so the
        # transform denominator crosses zero and the build must surface
        # a numerical failure rather than silently produce a potential
        doc = fig1_doc()
        doc["eps2"] = -1.9
        cfg = write_config(tmp_path, doc)
        assert main(["build", cfg, "--out-dir", str(tmp_path / "o")]) == 3
        assert "error:" in capsys.readouterr().err

    def test_unreachable_server_exits_3(self, tmp_path, capsys):
        cfg = write_config(tmp_path, fig1_doc())
        code = main(["build", cfg, "--server", "http://127.0.0.1:9",
                     "--out-dir", str(tmp_path / "o")])
        assert code == 3
        assert "request failed" in capsys.readouterr().err


class TestVerify:
    def test_clean_model_exits_zero(self, tmp_path, capsys):
        cfg = write_config(tmp_path, fig1_doc())
        assert main(["verify", cfg]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["overall"] == "pass"
        assert all(c["status"] in ("pass", "skip") for c in report["checks"])

    def test_corrupted_model_exits_one(self, tmp_path, capsys):
        doc = fig1_doc()
        doc["potential_offset_sigma3"] = 0.1
        cfg = write_config(tmp_path, doc)
        assert main(["verify", cfg]) == 1
        report = json.loads(capsys.readouterr().out)
        assert report["overall"] == "fail"
        assert any(c["status"] == "fail" for c in report["checks"])

    def test_missing_parameter_exits_2(self, tmp_path):
        doc = fig1_doc()
        del doc["eps1"]
        cfg = write_config(tmp_path, doc)
        assert main(["verify", cfg]) == 2


class TestScatter:
    def test_writes_csv(self, tmp_path, capsys):
        cfg = write_config(tmp_path, fig1_doc())
        out_dir = tmp_path / "sc"
        code = main(["scatter", cfg, "--energies=-6,6",
                     "--out-dir", str(out_dir)])
        assert code == 0
        lines = (out_dir / "scattering.csv").read_text().splitlines()
        assert lines[0].startswith("E,")
        assert len(lines) == 3
        assert "2 energies computed, 0 skipped" in capsys.readouterr().out

    def test_gap_energy_is_skipped_not_fatal(self, tmp_path, capsys):
        cfg = write_config(tmp_path, fig1_doc())
        code = main(["scatter", cfg, "--energies=0.0,6.0",
                     "--out-dir", str(tmp_path / "sc")])
        assert code == 0
        assert "1 energies computed, 1 skipped" in capsys.readouterr().out

    def test_step_flag_is_honored(self, tmp_path):
        cfg = write_config(tmp_path, fig1_doc())
        out_dir = tmp_path / "sc"
        code = main(["scatter", cfg, "--energies=6", "--step", "0.01",
                     "--out-dir", str(out_dir)])
        assert code == 0
        row = (out_dir / "scattering.csv").read_text().splitlines()[1]
        assert row.split(",")[7] == "ok"

    def test_bad_energy_token_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, fig1_doc())
        assert main(["scatter", cfg, "--energies=low"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_empty_energy_list_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, fig1_doc())
        assert main(["scatter", cfg, "--energies=,"]) == 2

    def test_negative_step_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, fig1_doc())
        assert main(["scatter", cfg, "--energies=6",
                     "--step", "-0.01"]) == 2


class TestArgumentParsing:
    def test_missing_subcommand_raises_system_exit(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2

    def test_scatter_requires_energies(self, tmp_path):
        cfg = write_config(tmp_path, fig1_doc())
        with pytest.raises(SystemExit):
            main(["scatter", cfg])
