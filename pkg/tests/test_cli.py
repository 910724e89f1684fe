import json
import math

import pytest

from waveguide.cli import main

PI = math.pi


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def run_cli(tmp_path, mode, cfg, subdir="out", threads=None):
    cfg_path = write_config(tmp_path, cfg, f"{mode}.json")
    out = tmp_path / subdir
    argv = [mode, "--config", cfg_path, "--out-dir", str(out)]
    if threads:
        argv += ["--threads", str(threads)]
    code = main(argv)
    csv = (out / "results.csv").read_text() if (out / "results.csv").exists() else None
    summary = (
        json.loads((out / "summary.json").read_text())
        if (out / "summary.json").exists()
        else None
    )
    return code, csv, summary


ZERO_CFG = {
    "geometry": {"b": 1.0},
    "density": {"terms": []},
}

BLOCK_CFG = {
    "geometry": {"b": 1.0},
    "density": {
        "terms": [
            {
                "amplitude": 0.1,
                "x": {"kind": "block", "x_lo": -0.5, "x_hi": 0.5},
                "y": {"kind": "constant"},
            }
        ]
    },
}


def test_perturb_zero_density_all_zero_row(tmp_path):
    code, csv, summary = run_cli(tmp_path, "perturb", ZERO_CFG)
    assert code == 0
    header, row = csv.strip().split("\n")
    assert header == "param,E0_plus,E0_minus,E0_pert,e2,e3,e4,flags"
    cells = row.split(",")
    assert float(cells[4]) == 0.0 and float(cells[5]) == 0.0 and float(cells[6]) == 0.0
    assert float(cells[3]) == pytest.approx(PI**2, rel=1e-15)
    assert summary["detail"]["gap"] == 0.0


def test_perturb_block_breakdown(tmp_path):
    code, _, summary = run_cli(tmp_path, "perturb", BLOCK_CFG)
    assert code == 0
    detail = summary["detail"]
    assert detail["moments"]["d2"] == pytest.approx(PI * 0.05, rel=1e-12)
    assert detail["bound_condition"]["delta2_sign"] == 1
    assert detail["bound_condition"]["a_min"] == pytest.approx(PI**2 * 0.05, rel=1e-12)


def test_compare_single_block(tmp_path):
    cfg = {
        "geometry": {"b": 1.0},
        "solvable": {"sigma1": 0.1, "sigma2": 0.1, "delta1": 1.0, "delta2": 1.0},
    }
    code, csv, summary = run_cli(tmp_path, "compare", cfg)
    assert code == 0
    comps = summary["detail"]["comparisons"]
    assert comps["e2_vs_series"] < 1e-7
    assert comps["e3_vs_series"] < 1e-7
    assert comps["e4_vs_series"] < 1e-7
    assert summary["detail"]["max_rel_discrepancy"] < 1e-7


def test_exact_mode(tmp_path):
    cfg = {
        "geometry": {"b": 1.0},
        "solvable": {"sigma1": 0.1, "sigma2": 0.1, "delta1": 1.0, "delta2": 1.0},
    }
    code, csv, summary = run_cli(tmp_path, "exact", cfg)
    assert code == 0
    assert summary["detail"]["bound_state"] is True
    assert summary["detail"]["energy"] < PI**2
    assert max(summary["detail"]["matching_residuals"]) < 1e-9


def test_exact_mode_no_bound_state(tmp_path):
    cfg = {
        "geometry": {"b": 1.0},
        "solvable": {"sigma1": -0.1, "sigma2": -0.1, "delta1": 1.0, "delta2": 1.0},
    }
    code, csv, summary = run_cli(tmp_path, "exact", cfg)
    assert code == 0  # physical absence is not a numerical failure
    assert summary["detail"]["bound_state"] is False
    assert "no-bound-state" in csv


def test_series_mode_zero_average(tmp_path):
    cfg = {
        "geometry": {"b": 1.0},
        "solvable": {"zero_average": True, "delta1": 0.5, "delta2": 1.0, "sigma2": 0.1},
        "series": {"order": 4, "zero_average": True},
    }
    code, _, summary = run_cli(tmp_path, "series", cfg)
    assert code == 0
    assert summary["detail"]["value"] - PI**2 == pytest.approx(-1.0295715078e-4, rel=1e-9)


def test_oracle_mode(tmp_path):
    cfg = dict(BLOCK_CFG)
    cfg["grid"] = {"half_length": 8.0, "nx": 127, "ny": 15}
    code, csv, summary = run_cli(tmp_path, "oracle", cfg)
    assert code == 0
    d = summary["detail"]
    # discrete values rise toward the limit: the h^2 bias is negative here
    assert d["coarse"] < d["fine"] < d["extrapolated"] < PI**2
    assert d["extrapolated"] == pytest.approx(9.69050, abs=5e-3)


def test_sweep_reproduces_columns_and_is_deterministic(tmp_path):
    cfg = {
        "geometry": {"b": 1.0},
        "sweep": {
            "variable": "delta1",
            "values": [0.3, 0.5, 0.7],
            "delta2": 1.0,
            "sigma2": 0.1,
            "zero_average": True,
        },
    }
    code1, csv1, s1 = run_cli(tmp_path, "sweep", cfg, subdir="o1")
    code2, csv2, s2 = run_cli(tmp_path, "sweep", cfg, subdir="o2", threads=3)
    assert code1 == code2 == 0
    assert csv1 == csv2  # byte-identical, threaded or not
    assert s1 == s2
    rows = csv1.strip().split("\n")[1:]
    assert len(rows) == 3
    mid = rows[1].split(",")
    assert float(mid[0]) == 0.5
    assert float(mid[1]) < PI**2  # E0_plus bound
    assert float(mid[2]) < PI**2  # E0_minus bound
    assert float(mid[3]) == pytest.approx(PI**2 - 1.0295715078e-4, rel=1e-10)


class TestConfigErrors:
    def test_missing_density(self, tmp_path):
        code, _, _ = run_cli(tmp_path, "perturb", {"geometry": {"b": 1.0}})
        assert code == 2

    def test_missing_density_reports_path(self, tmp_path, capsys):
        run_cli(tmp_path, "perturb", {"geometry": {"b": 1.0}})
        assert "density" in capsys.readouterr().err

    def test_bad_profile_kind(self, tmp_path, capsys):
        cfg = {
            "density": {
                "terms": [
                    {
                        "amplitude": 0.1,
                        "x": {"kind": "gaussian"},
                        "y": {"kind": "constant"},
                    }
                ]
            }
        }
        code, _, _ = run_cli(tmp_path, "perturb", cfg)
        assert code == 2
        assert "density.terms[0].x.kind" in capsys.readouterr().err

    def test_unsorted_sweep_values(self, tmp_path, capsys):
        cfg = {
            "sweep": {
                "variable": "delta1",
                "values": [0.5, 0.3],
                "delta2": 1.0,
                "sigma2": 0.1,
            }
        }
        code, _, _ = run_cli(tmp_path, "sweep", cfg)
        assert code == 2
        assert "sweep.values" in capsys.readouterr().err

    def test_mode_mismatch(self, tmp_path, capsys):
        cfg = dict(BLOCK_CFG)
        cfg["mode"] = "exact"
        code, _, _ = run_cli(tmp_path, "perturb", cfg)
        assert code == 2

    def test_unreadable_config(self, tmp_path, capsys):
        code = main(["perturb", "--config", str(tmp_path / "missing.json")])
        assert code == 2

    def test_invalid_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json", encoding="utf-8")
        assert main(["perturb", "--config", str(p)]) == 2

    def test_positivity_violation_is_config_error(self, tmp_path, capsys):
        cfg = {
            "density": {
                "terms": [
                    {
                        "amplitude": -2.0,
                        "x": {"kind": "block", "x_lo": -0.5, "x_hi": 0.5},
                        "y": {"kind": "constant"},
                    }
                ]
            }
        }
        code, _, _ = run_cli(tmp_path, "perturb", cfg)
        assert code == 2
        assert "not positive" in capsys.readouterr().err


def test_tolerance_failure_exits_3(tmp_path):
    cfg = {
        "geometry": {"b": 1.0},
        "density": {
            "terms": [
                {
                    "amplitude": 0.1,
                    "x": {"kind": "block", "x_lo": -0.5, "x_hi": 0.5},
                    "y": {"kind": "mode", "n": 2},
                }
            ]
        },
        "quadrature": {"points_per_panel": 2, "max_panels": 1, "rel_tol": 1e-15, "abs_tol": 1e-18},
    }
    code, csv, summary = run_cli(tmp_path, "perturb", cfg)
    assert code == 3
    assert any(r["flags"] for r in summary["rows"])
