"""End-to-end checks of the command-line front end, run in-process."""

import json
import math

import pytest

from blowprof.cli import main

RUN = main  # alias: every test invokes the real entry point with an argv list


def lines_of(capsys):
    out, err = capsys.readouterr()
    return out.splitlines(), err.splitlines()


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def test_report_prints_derived_constants(capsys):
    rc = RUN(["report", "--m", "2", "--N", "4", "--sigma", "0.5"])
    assert rc == 0
    out, _ = lines_of(capsys)
    text = "\n".join(out)
    assert "  sigma_c = 0.85714285714285712" in text
    assert "  h0 = 0.81649658092772603" in text
    assert "regime: subcritical" in text
    assert "all in-range claims pass" in text
    # every critical point appears with its spectrum
    for label in ("P0", "P1", "P2", "P3", "Q1", "Q2", "Q3", "Q4", "Q5"):
        assert f"  {label} " in text


def test_report_flags_the_critical_regime(capsys):
    rc = RUN(["report", "--m", "2", "--N", "4", "--sigma", "0.857142857"])
    assert rc == 0
    text = "\n".join(lines_of(capsys)[0])
    assert "regime: critical" in text
    assert "undefined (K1 = 0)" not in text  # K1 is tiny but nonzero here

    rc = RUN(["report", "--m", "2", "--N", "4", "--sigma", "0.857"])
    assert rc == 0
    assert "regime: subcritical" in "\n".join(lines_of(capsys)[0])


def test_report_json_document(capsys, tmp_path):
    rc = RUN([
        "report", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--json", "--out", str(tmp_path),
    ])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["tool"] == "blowprof"
    assert doc["derived"]["sigma_c"] == pytest.approx(6.0 / 7.0, rel=1e-15)
    assert doc["k1_critical"] is False
    assert len(doc["critical_points"]) == 9
    assert doc["certificates"]["all_in_range_pass"] is True
    on_disk = json.loads((tmp_path / "report.json").read_text())
    assert on_disk == doc


def test_report_rejects_bad_parameters(capsys):
    rc = RUN(["report", "--m", "1", "--N", "4", "--sigma", "0.5"])
    assert rc == 2
    _, err = lines_of(capsys)
    assert err and err[0].startswith("error:")
    assert "M_OUT_OF_RANGE" in err[0]


def test_report_requires_the_parameter_triple(capsys):
    rc = RUN(["report", "--m", "2", "--N", "4"])
    assert rc == 2
    assert "--sigma" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------


def test_integrate_writes_trajectory_files(capsys, tmp_path):
    rc = RUN([
        "integrate", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--state", "0,0.2,0", "--span", "5", "--json",
        "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "integrated MAIN orbit (forward): status=completed" in out
    head, cols, *rows = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert head.startswith("# blowprof ")
    assert " integrate m=2 N=4 sigma=0.5 " in head
    assert "chart=MAIN" in head and "direction=forward" in head
    assert cols == "eta,X,Y,Z"
    assert float(rows[-1].split(",")[0]) == pytest.approx(5.0, abs=1e-12)
    doc = json.loads((tmp_path / "trajectory.json").read_text())
    assert doc["chart"] == "MAIN" and doc["status"] == "completed"


def test_integrate_from_named_origin_defaults_backward_for_P1(capsys, tmp_path):
    rc = RUN([
        "integrate", "--m", "2", "--N", "4", "--sigma", "1.5",
        "--origin", "P1", "--span", "10", "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "integrated MAIN orbit (backward)" in out
    head = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert "origin=P1_BACKWARD" in head


def test_integrate_needs_exactly_one_start(capsys, tmp_path):
    rc = RUN([
        "integrate", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--out", str(tmp_path),
    ])
    assert rc == 2
    assert "exactly one of --state or --origin" in capsys.readouterr().err

    rc = RUN([
        "integrate", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--state", "0,0.2", "--out", str(tmp_path),
    ])
    assert rc == 2
    assert "3 components" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------


def test_classify_sigma_sweep_counts_fates(capsys, tmp_path):
    rc = RUN([
        "classify", "--m", "2", "--N", "4", "--origin", "P2",
        "--sigma-range", "0.1:0.85:0.05", "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "fates: ENTERS_P3 x15, ENTERS_Q3 x1" in out
    head, cols, *rows = (tmp_path / "classify.csv").read_text().splitlines()
    assert head.startswith("# blowprof ")
    assert " classify m=2 N=4 sigma=0.1 origin=P2_E3 parameter=SIGMA" in head
    assert cols == (
        "value,fate,eta_span,terminal_eta,s0,s1,s2,"
        "terminal_chart,terminal_node,profile_class,reason"
    )
    assert len(rows) == 16
    assert rows[0].startswith("0.1,ENTERS_P3,")
    assert rows[-1].startswith("0.85,ENTERS_Q3,")
    doc = json.loads((tmp_path / "classify.json").read_text())
    assert doc["n_indeterminate"] == 0
    assert len(doc["rows"]) == 16


def test_classify_indeterminate_majority_exits_3(capsys):
    rc = RUN([
        "classify", "--m", "2", "--N", "4", "--origin", "P2",
        "--sigma-range", "0.2:0.3:0.1", "--span", "0.5",
    ])
    assert rc == 3
    out = capsys.readouterr().out
    assert "classification unreliable" in out
    assert "INDETERMINATE" in out


def test_classify_requires_exactly_one_grid(capsys):
    rc = RUN(["classify", "--m", "2", "--N", "4", "--origin", "P2"])
    assert rc == 2
    assert "give exactly one grid" in capsys.readouterr().err

    rc = RUN([
        "classify", "--m", "2", "--N", "4", "--origin", "P2",
        "--sigma-range", "0.1:0.2", "--D-range", "0.1:1",
    ])
    assert rc == 2
    assert "give exactly one grid" in capsys.readouterr().err


def test_classify_values_grid_needs_parameter(capsys):
    rc = RUN([
        "classify", "--m", "2", "--N", "4", "--origin", "P2",
        "--values", "0.3,0.5",
    ])
    assert rc == 2
    assert "--parameter" in capsys.readouterr().err


def test_classify_worker_pool_output_is_byte_identical(capsys, tmp_path):
    argv = [
        "classify", "--m", "2", "--N", "4", "--origin", "P2",
        "--values", "0.3,0.5", "--parameter", "sigma",
    ]
    rc = RUN(argv + ["--out", str(tmp_path / "serial")])
    assert rc == 0
    rc = RUN(argv + ["--out", str(tmp_path / "pool"), "--workers", "2"])
    assert rc == 0
    capsys.readouterr()
    serial = (tmp_path / "serial" / "classify.csv").read_bytes()
    pool = (tmp_path / "pool" / "classify.csv").read_bytes()
    assert serial == pool


# ---------------------------------------------------------------------------
# bisect
# ---------------------------------------------------------------------------


def test_bisect_brackets_the_sigma_transition(capsys, tmp_path):
    rc = RUN([
        "bisect", "--m", "2", "--N", "4", "--origin", "P2",
        "--parameter", "sigma", "--lo", "0.82", "--hi", "0.84",
        "--tol", "5e-3", "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "fate_lo=ENTERS_P3" in out and "fate_hi=ENTERS_Q3" in out
    doc = json.loads((tmp_path / "bracket.json").read_text())
    assert doc["parameter"] == "SIGMA"
    assert 0.82 <= doc["lo"] < doc["hi"] <= 0.84
    assert doc["width"] <= 5e-3
    assert doc["fate_lo"] == "ENTERS_P3" and doc["fate_hi"] == "ENTERS_Q3"
    assert doc["probes"] >= 2


def test_bisect_same_fate_is_an_input_error(capsys, tmp_path):
    rc = RUN([
        "bisect", "--m", "2", "--N", "4", "--origin", "P2",
        "--parameter", "sigma", "--lo", "0.1", "--hi", "0.2",
        "--tol", "1e-2", "--out", str(tmp_path),
    ])
    assert rc == 2
    assert "SAME_FATE_AT_ENDPOINTS" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------


def test_certify_table_and_json(capsys, tmp_path):
    rc = RUN(["certify", "--m", "2", "--N", "4", "--sigma", "0.5"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "all in-range claims pass" in out
    assert "[FAIL]" not in out

    rc = RUN([
        "certify", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--json", "--out", str(tmp_path),
    ])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["all_in_range_pass"] is True
    assert json.loads((tmp_path / "certify.json").read_text()) == doc


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------


def test_profile_direct_route_finds_the_interface(capsys, tmp_path):
    rc = RUN([
        "profile", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--anchor", "INTERFACE", "--constant", "1",
        "--xi-span", "0.5:12", "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "interface_xi=" in out
    doc = json.loads((tmp_path / "profile.json").read_text())
    assert doc["interface_xi"] == pytest.approx(2.0 * math.sqrt(3.0), rel=1e-6)
    head, cols, *rows = (tmp_path / "profile.csv").read_text().splitlines()
    assert head.startswith("# blowprof ") and " profile " in head
    assert cols == "xi,f"
    assert len(rows) >= 100


def test_profile_phase_route_satisfies_the_equation(capsys, tmp_path):
    rc = RUN([
        "profile", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--origin", "P2", "--eta-budget", "60", "--g-diagnostics",
        "--out", str(tmp_path),
    ])
    assert rc == 0
    capsys.readouterr()
    doc = json.loads((tmp_path / "profile.json").read_text())
    assert doc["residual_rel_sup"] < 1e-3
    assert doc["g_diagnostics"]["amplitudes_strictly_decreasing"] is True
    assert doc["g_diagnostics"]["tail_exponent_expected"] == pytest.approx(-0.5)


def test_profile_rejects_infinity_origins_and_double_routes(capsys, tmp_path):
    rc = RUN([
        "profile", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--origin", "Q1", "--out", str(tmp_path),
    ])
    assert rc == 2
    assert "direct route" in capsys.readouterr().err

    rc = RUN([
        "profile", "--m", "2", "--N", "4", "--sigma", "0.5",
        "--origin", "P2", "--anchor", "INTERFACE", "--out", str(tmp_path),
    ])
    assert rc == 2
    assert "exactly one of --origin or --anchor" in capsys.readouterr().err


def test_profile_touchdown_is_a_numerical_failure_code(capsys, tmp_path):
    rc = RUN([
        "profile", "--m", "2", "--N", "2", "--sigma", "0.2",
        "--anchor", "FLAT_Q1", "--constant", "4",
        "--xi-span", "1e-6:40", "--out", str(tmp_path),
    ])
    assert rc == 4
    assert "TOUCHDOWN" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# figure
# ---------------------------------------------------------------------------


def test_figure_1_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert RUN(["figure", "1", "--out", str(a)]) == 0
    assert RUN(["figure", "1", "--out", str(b)]) == 0
    capsys.readouterr()
    data = (a / "figure1_cycles.csv").read_bytes()
    assert data == (b / "figure1_cycles.csv").read_bytes()
    text = data.decode()
    head, cols, first, *_ = text.splitlines()
    assert " figure1 m=2 N=4 sigma=0.5 " in head
    assert cols == "K,Z,Y"
    assert first == "0,0,0.81649658092772603"
    # five closed curves: the degenerate K=0 boundary plus four interior loops
    ks = {line.split(",")[0] for line in text.splitlines()[2:]}
    assert len(ks) == 5


def test_figure_3_writes_orbits_fates_and_surface(capsys, tmp_path):
    rc = RUN(["figure", "3", "--out", str(tmp_path)])
    assert rc == 0
    capsys.readouterr()
    for org in ("P2_E3", "P0_UNSTABLE", "P1_BACKWARD"):
        assert (tmp_path / f"figure3_orbit_{org}.csv").exists()
    head, cols, *rows = (tmp_path / "figure3_fates.csv").read_text().splitlines()
    assert " figure3 m=2 N=4 sigma=5 " in head
    assert cols == "origin,fate,terminal_node,profile_class,eta_span,min_dist_P1"
    table = {r.split(",")[0]: r.split(",") for r in rows}
    assert table["P1_BACKWARD"][1] == "ESCAPES_Q5"
    assert float(table["P1_BACKWARD"][5]) < 1e-4  # starts on the beam next to P1
    surf = (tmp_path / "figure3_surface.csv").read_text().splitlines()
    assert surf[1] == "X,Y,Z"
    assert len(surf) == 2 + 61 * 61


def test_figure_requires_an_id(capsys, tmp_path):
    rc = RUN(["figure", "--out", str(tmp_path)])
    assert rc == 2
    assert "missing figure id" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------


def test_config_file_fills_options_and_flags_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 2.0, "N": 4.0, "sigma": 0.857142857}))
    rc = RUN(["report", "--config", str(cfg)])
    assert rc == 0
    assert "regime: critical" in capsys.readouterr().out

    rc = RUN(["report", "--config", str(cfg), "--sigma", "0.5"])
    assert rc == 0
    text = capsys.readouterr().out
    assert "sigma = 0.5 " in text
    assert "regime: subcritical" in text


def test_config_file_rejects_unknown_keys(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 2.0, "N": 4.0, "sigma": 0.5, "bogus": 1}))
    rc = RUN(["report", "--config", str(cfg)])
    assert rc == 2
    assert "bogus" in capsys.readouterr().err


def test_config_file_must_be_valid_json(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2, 3]")
    rc = RUN(["report", "--config", str(cfg)])
    assert rc == 2
    assert "JSON object" in capsys.readouterr().err


def test_no_command_prints_help(capsys):
    assert RUN([]) == 2
    assert "usage:" in capsys.readouterr().err
