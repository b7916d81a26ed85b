"""Compare the compiled integrator kernel against the pure-Python fallback.

Run as ``python -m blowprof.benchmark``.  Every available kernel executes the
same raw integration workloads (identical inputs, identical event rows); the
report shows accepted steps, best wall time over the repeats, per-step cost
and the speedup of the compiled extension, and verifies that the kernels
agree on the final state (they are line-mirrored implementations, so the
agreement is expected to be exact).
"""

from __future__ import annotations

import argparse
import math
import sys
import time

from . import _core
from ._version import __version__
from .integrate import (
    BallEntry,
    Escape,
    IntegrationControls,
    PlaneCross,
    _pack_event,
)
from .model import validate_params
from .shooting import SeedOrigin, SeedSpec, seed
from .vectorfields import ChartId

__all__ = ["main", "run_benchmark"]


def _workloads():
    """Deterministic raw-kernel workloads spanning the hot paths."""
    controls = IntegrationControls()
    out = []

    # long smooth spiral on the primary chart (fate-classification core)
    params = validate_params(2.0, 4.0, 0.5)
    chart, y0 = seed(SeedSpec(origin=SeedOrigin.P2_E3), params)
    out.append({
        "label": "MAIN spiral (2, 4, 0.5), span 120",
        "code": int(chart),
        "y0": tuple(float(v) for v in y0),
        "params": params,
        "span": 120.0,
        "events": [],
        "record": False,
    })

    # event-heavy run: section plane, point ball, escape guard
    params = validate_params(2.0, 2.0, 0.2)
    chart, y0 = seed(SeedSpec(origin=SeedOrigin.P0_UNSTABLE, theta=-1.2), params)
    h0 = math.sqrt(2.0 / 3.0)
    specs = [
        PlaneCross(axis="Y", level=0.0, direction=0, terminal=False),
        BallEntry(center=(0.0, -h0, 0.0), radius=1e-4, field_gate=1e-6,
                  terminal=True, label="P1"),
        Escape(threshold=1e3),
    ]
    out.append({
        "label": "MAIN with plane+ball+escape events (2, 2, 0.2), span 60",
        "code": int(chart),
        "y0": tuple(float(v) for v in y0),
        "params": params,
        "span": 60.0,
        "events": [_pack_event(chart, s, controls) for s in specs],
        "record": False,
    })

    # chart at infinity (saddle passage feeding the handoff router)
    params = validate_params(2.0, 4.0, 0.84)
    chart, y0 = seed(SeedSpec(origin=SeedOrigin.Q1_OUT, phi=math.pi / 4.0), params)
    out.append({
        "label": "CHART_Q1 saddle passage (2, 4, 0.84), span 15",
        "code": int(chart),
        "y0": tuple(float(v) for v in y0),
        "params": params,
        "span": 15.0,
        "events": [],
        "record": False,
    })

    # dense recording (profile reconstruction path)
    params = validate_params(2.0, 4.0, 0.5)
    chart, y0 = seed(SeedSpec(origin=SeedOrigin.P2_E3), params)
    out.append({
        "label": "MAIN recorded orbit (2, 4, 0.5), span 60",
        "code": int(chart),
        "y0": tuple(float(v) for v in y0),
        "params": params,
        "span": 60.0,
        "events": [],
        "record": True,
    })
    return out


def _run_once(kernel, wl):
    params = wl["params"]
    return kernel.integrate_raw(
        wl["code"], wl["y0"], params.m, params.N, params.sigma,
        1, wl["span"], 1e-10, 1e-12, 10**7, 0.0,
        wl["events"], wl["record"],
    )


def run_benchmark(repeats: int = 3) -> list[dict]:
    """Time every workload on every available kernel; return result rows."""
    kernels = _core.available_kernels()
    rows = []
    for wl in _workloads():
        entry = {"label": wl["label"], "kernels": {}}
        finals = {}
        for name, kernel in kernels.items():
            best = math.inf
            res = None
            for _ in range(repeats):
                t0 = time.perf_counter()
                res = _run_once(kernel, wl)
                best = min(best, time.perf_counter() - t0)
            finals[name] = res["y"]
            entry["kernels"][name] = {
                "best_seconds": best,
                "steps": res["nsteps"],
                "nfev": res["nfev"],
                "status": res["status"],
            }
        if len(finals) == 2:
            a, b = (finals[k] for k in ("cython", "python"))
            entry["final_state_max_diff"] = max(
                abs(x - y) for x, y in zip(a, b)
            )
        rows.append(entry)
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blowprof.benchmark",
        description="Time the compiled integrator kernel against the "
                    "pure-Python fallback on identical workloads.",
    )
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats per workload (best is kept)")
    args = parser.parse_args(argv)
    if args.repeats < 1:
        print("error: --repeats must be >= 1", file=sys.stderr)
        return 2

    names = list(_core.available_kernels())
    print(f"blowprof {__version__} kernel benchmark")
    print(f"active kernel: {_core.KERNEL}; available: {', '.join(names)}")
    if "cython" not in names:
        print("note: compiled extension not importable here - "
              "timing the pure-Python fallback only")

    rows = run_benchmark(repeats=args.repeats)
    for entry in rows:
        print()
        print(entry["label"])
        base = entry["kernels"].get("python")
        for name in names:
            k = entry["kernels"][name]
            per_step = k["best_seconds"] / max(k["steps"], 1)
            line = (
                f"  {name:<7} best {k['best_seconds'] * 1e3:9.3f} ms   "
                f"{k['steps']:7d} steps   {per_step * 1e6:8.2f} us/step"
            )
            if name == "cython" and base is not None:
                line += f"   speedup {base['best_seconds'] / k['best_seconds']:6.1f}x"
            print(line)
        if "final_state_max_diff" in entry:
            print(f"  agreement: max |final state difference| = "
                  f"{entry['final_state_max_diff']:.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
