"""The kernel benchmark runs and proves the kernels interchangeable."""

from blowprof import _core
from blowprof.benchmark import main, run_benchmark


def test_run_benchmark_rows_cover_every_kernel():
    rows = run_benchmark(repeats=1)
    assert len(rows) == 4
    names = set(_core.available_kernels())
    assert "python" in names
    for entry in rows:
        assert set(entry["kernels"]) == names
        for rec in entry["kernels"].values():
            assert rec["steps"] > 0
            assert rec["nfev"] > rec["steps"]
            assert rec["best_seconds"] > 0.0
        if len(names) == 2:
            # mirrored implementations: bit-identical final states
            assert entry["final_state_max_diff"] == 0.0


def test_benchmark_cli_smoke(capsys):
    assert main(["--repeats", "1"]) == 0
    out = capsys.readouterr().out
    assert "kernel benchmark" in out
    assert "us/step" in out
    assert main(["--repeats", "0"]) == 2
