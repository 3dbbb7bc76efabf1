"""Config schema, the build dispatcher, and deterministic artifact
rendering."""
import json
import os

import numpy as np
import pytest

from conftest import load_preset
from dirac_darboux.config import build_model, parse_config
from dirac_darboux.errors import InvalidInputError
from dirac_darboux.numerics import sup_norm
from dirac_darboux.outputs import (atomic_write, build_artifacts, fmt,
                                   render_bound_states, render_model_json,
                                   render_potentials, render_scattering)
from dirac_darboux.scattering import ScatteringResult

PRESETS = ("fig1", "fig2", "fig3", "fig4", "soc_klein")

SMALL_GRID = {"x_min": -15.0, "x_max": 15.0, "n_points": 1501}


class TestConfigSchema:
    def test_unknown_key_is_rejected(self):
        with pytest.raises(InvalidInputError):
            parse_config({"kind": "free2x2", "v": 1.0, "w": 2.0,
                          "bogus": 3.0})

    def test_kind_is_mandatory(self):
        with pytest.raises(InvalidInputError):
            parse_config({"v": 1.0, "w": 2.0})

    def test_unknown_kind_is_rejected(self):
        with pytest.raises(InvalidInputError):
            parse_config({"kind": "hexagonal"})

    def test_defaults(self):
        cfg = parse_config({"kind": "free2x2", "v": 1.0, "w": 2.0})
        assert cfg.grid.x_min == -30.0
        assert cfg.grid.x_max == 30.0
        assert cfg.grid.n_points == 6001
        assert cfg.alpha == 0.0
        assert cfg.coupling is True
        assert cfg.potential_offset_sigma3 == 0.0
        assert cfg.lambda_mode == "equal_to_v1_tilde"

    @pytest.mark.parametrize("data", [
        {"kind": "darboux2x2", "v": -2.0, "w": 5.0},
        {"kind": "distortion", "v1": 3.0, "w1": -2.0, "eps1": 1.0,
         "eps2": 0.5, "eps3": 0.25, "eps4": -0.5},
        {"kind": "spin_orbit", "v1": 1.0},
        {"kind": "nonreducible", "v1": 3.0, "w1": -2.0, "v2": 2.5,
         "w2": -1.5},
    ], ids=["no-eps", "no-second-block", "no-gap", "no-energies"])
    def test_missing_parameters_fail_at_build(self, data):
        cfg = parse_config(data)
        with pytest.raises(InvalidInputError):
            build_model(cfg)

    def test_constant_coupling_needs_a_value(self):
        cfg = parse_config({"kind": "spin_orbit", "v1": 1.0, "eps1": 0.6,
                            "lambda_mode": "constant",
                            "grid": SMALL_GRID})
        with pytest.raises(InvalidInputError):
            build_model(cfg)

    def test_grid_override(self):
        cfg = parse_config({"kind": "free2x2", "v": 1.0, "w": 2.0,
                            "grid": {"x_min": -10.0, "x_max": 10.0,
                                     "n_points": 501}})
        model = build_model(cfg)
        assert model.grid.x_min == -10.0
        assert model.grid.n_points == 501
        assert len(model.grid.points()) == 501


class TestPresets:
    @pytest.mark.parametrize("name", PRESETS)
    def test_presets_parse(self, name):
        cfg = parse_config(load_preset(name))
        assert cfg.name == name

    def test_preset_models(self, fig1_model, fig2_model, fig3_model,
                           fig4_model, soc_model):
        assert fig1_model.kind == "darboux2x2"
        assert len(fig1_model.bound_states) == 2
        assert len(fig2_model.bound_states) == 2
        assert fig3_model.kind == "distortion"
        assert len(fig3_model.bound_states) == 4
        assert fig4_model.kind == "nonreducible"
        assert len(fig4_model.bound_states) == 4
        assert soc_model.kind == "spin_orbit"
        assert len(soc_model.bound_states) == 2


class TestCorruptionKnob:
    def test_sigma3_offset_2x2(self):
        data = load_preset("fig1")
        data["potential_offset_sigma3"] = 0.1
        data["grid"] = SMALL_GRID
        model = build_model(parse_config(data))
        shift = np.asarray(model.potential(0.0)) \
            - np.asarray(model.clean_potential(0.0))
        assert sup_norm(shift - 0.1 * np.diag([1.0, -1.0])) < 1e-14
        asym_shift = model.potential.asymptotic_plus \
            - model.clean_potential.asymptotic_plus
        assert sup_norm(asym_shift - 0.1 * np.diag([1.0, -1.0])) < 1e-14

    def test_sigma3_offset_4x4(self):
        data = load_preset("fig3")
        data["potential_offset_sigma3"] = 0.1
        data["grid"] = SMALL_GRID
        model = build_model(parse_config(data))
        shift = np.asarray(model.potential(0.0)) \
            - np.asarray(model.clean_potential(0.0))
        assert sup_norm(shift - 0.1 * np.diag([1.0, -1.0, 1.0, -1.0])) \
            < 1e-14

    def test_zero_offset_is_identity(self, fig1_model):
        xs = np.linspace(-3.0, 3.0, 7)
        assert sup_norm(np.asarray(fig1_model.potential(xs))
                        - np.asarray(fig1_model.clean_potential(xs))) == 0.0


class TestRendering:
    def test_fmt_is_fixed_width_scientific(self):
        assert fmt(1.0) == "1.0000000000000000e+00"
        assert fmt(-0.5) == "-5.0000000000000000e-01"

    def test_atomic_write(self, tmp_path):
        target = tmp_path / "out.csv"
        atomic_write(str(target), "a,b\n")
        assert target.read_text() == "a,b\n"
        atomic_write(str(target), "c,d\n")
        assert target.read_text() == "c,d\n"
        leftovers = [p for p in os.listdir(tmp_path)
                     if p.endswith(".tmp")]
        assert leftovers == []

    @pytest.mark.parametrize("preset,want", [
        ("fig1", ["x", "v_t", "w_t", "a_t_re", "a_t_im"]),
        ("fig3", ["x", "V_A", "V_B", "V_re", "V_im", "V_prime_re",
                  "V_prime_im", "W_A_re", "W_A_im", "W_B_re", "W_B_im",
                  "W_plus_re", "W_plus_im", "W_minus_re", "W_minus_im"]),
        ("soc_klein", ["x", "V", "Delta", "lambda"]),
    ])
    def test_potential_headers(self, preset, want, request):
        fixture = {"fig1": "fig1_model", "fig3": "fig3_model",
                   "soc_klein": "soc_model"}[preset]
        model = request.getfixturevalue(fixture)
        text = render_potentials(model)
        assert text.splitlines()[0].split(",") == want

    def test_nonreducible_header_carries_the_upper_block(self, fig4_model):
        header = render_potentials(fig4_model).splitlines()[0].split(",")
        assert header[:9] == ["x", "v_t1", "w_t1", "a_t1_re", "a_t1_im",
                              "v_t2", "w_t2", "a_t2_re", "a_t2_im"]
        assert header[9:] == [f"upper_block_{i}{j}_{part}"
                              for i in (1, 2) for j in (1, 2)
                              for part in ("re", "im")]

    def test_free_kind_header(self):
        cfg = parse_config({"kind": "free2x2", "v": -2.0, "w": 5.0,
                            "grid": {"x_min": -2.0, "x_max": 2.0,
                                     "n_points": 5}})
        model = build_model(cfg)
        text = render_potentials(model)
        lines = text.splitlines()
        assert lines[0] == "x,v,w,a_re,a_im"
        assert len(lines) == 6
        row = lines[3].split(",")
        assert float(row[0]) == 0.0
        assert float(row[1]) == -2.0
        assert float(row[2]) == 5.0

    def test_potential_values_at_origin(self, fig1_model):
        lines = render_potentials(fig1_model).splitlines()
        mid = lines[1 + (fig1_model.grid.n_points - 1) // 2].split(",")
        assert float(mid[0]) == 0.0
        assert abs(float(mid[1]) - 2.0) < 1e-10
        assert abs(float(mid[2]) - 1.0) < 1e-10
        assert abs(float(mid[3])) < 1e-10

    def test_bound_state_columns(self, fig1_model):
        lines = render_bound_states(fig1_model).splitlines()
        assert lines[0] == "x,P_eps1,P_eps2"
        assert len(lines) == 1 + fig1_model.grid.n_points

    def test_no_bound_states_renders_bare_header(self):
        cfg = parse_config({"kind": "free2x2", "v": -2.0, "w": 5.0,
                            "grid": {"x_min": -2.0, "x_max": 2.0,
                                     "n_points": 5}})
        assert render_bound_states(build_model(cfg)) == "x\n"

    def test_rendering_is_deterministic(self):
        data = load_preset("fig1")
        data["grid"] = SMALL_GRID
        a = build_artifacts(build_model(parse_config(data)))
        b = build_artifacts(build_model(parse_config(data)))
        assert set(a) == {"potentials.csv", "bound_states.csv",
                          "model.json"}
        for key in a:
            assert a[key] == b[key]

    def test_scattering_rows(self):
        res = ScatteringResult(energy=6.0, R=1e-13 + 0j, T=1.0 + 0j,
                               flux_defect=1e-12, box_halfwidth=7.5)
        entries = [{"energy": 0.0,
                    "skip_reason": "E = 0.0 lies in the gap, both sides"},
                   {"energy": 6.0, "result": res}]
        lines = render_scattering(entries).splitlines()
        assert lines[0] == ("E,Re_R,Im_R,abs_R,abs_T,flux_defect,L_used,"
                            "status,reason")
        skip = lines[1].split(",")
        assert skip[7] == "skip"
        # embedded commas must not break the csv row
        assert len(skip) == 9
        assert ";" in skip[8]
        ok = lines[2].split(",")
        assert ok[7] == "ok"
        assert float(ok[3]) == 1e-13
        assert float(ok[6]) == 7.5


class TestModelJson:
    def test_document_structure(self, fig1_model):
        doc = json.loads(render_model_json(fig1_model))
        assert doc["kind"] == "darboux2x2"
        assert doc["name"] == "fig1"
        assert len(doc["bound_states"]) == 2
        assert doc["regularity"]["sufficient_condition_holds"] is True
        assert doc["regularity"]["node_detected"] is False
        assert len(doc["kappas"]) == 2
        # asymptotic matrices serialize as [re, im] pairs
        m = doc["asymptotic_plus"]
        assert len(m) == 2 and len(m[0]) == 2 and len(m[0][0]) == 2

    def test_config_round_trips(self, fig1_model):
        doc = json.loads(render_model_json(fig1_model))
        assert parse_config(doc["config"]) == fig1_model.config

    def test_keys_are_sorted(self, fig1_model):
        text = render_model_json(fig1_model)
        doc = json.loads(text)
        assert text == json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def test_kind_extras(self, fig4_model, soc_model):
        doc4 = json.loads(render_model_json(fig4_model))
        assert doc4["hermiticity_defect"] > 1.0
        assert doc4["offspan_max"] > 1.0
        assert doc4["asymptotic_minus"] is None
        docs = json.loads(render_model_json(soc_model))
        assert docs["lambda_mode"] == "equal_to_v1_tilde"
        assert abs(docs["kappa"] - 0.8) < 1e-12
