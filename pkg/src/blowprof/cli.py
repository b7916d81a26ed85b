"""Batch front-end: reports, orbit runs, fate sweeps, bisections, audits, figures.

Commands
--------
``report``     parameter-level report: derived constants, every critical point
               with spectrum and behavior tag, the coefficient pack, and a
               certificate summary.
``integrate``  one orbit from an explicit chart state or a named seed origin,
               written as a trajectory CSV (and optionally JSON).
``classify``   fate sweep over a parameter grid; one row per grid point with
               fate and diagnostics, written as CSV/JSON.
``bisect``     bracket the first fate transition inside [lo, hi]; writes a
               bracket JSON file.
``certify``    evaluate the closed-form sign certificates at one parameter
               triple and report pass/fail per claim.
``profile``    emit a radial profile f(ξ): either reconstructed from a phase
               orbit (``--origin``) or swept directly in ξ from an endpoint
               expansion (``--anchor``).
``figure``     plot-ready CSV bundles for the three standard figures:
               1 — the closed-orbit family in the invariant plane {X = 0};
               2 — orbits from every seed origin at the two reference weights;
               3 — orbits plus the separatrix-surface mesh.

Conventions
-----------
* Numbers are printed with 17 significant digits (round-trip safe for
  double precision) and identical configurations produce byte-identical
  files - no timestamps ever enter a data file.
* Every CSV starts with a comment line naming the tool version and the
  parameter triple.
* Options may be supplied in a JSON config file (``--config``); explicit
  command-line flags override the file, which overrides built-in defaults.
* Exit codes: 0 success; 2 invalid input; 3 classification unreliable
  (more than half of the sweep/bisection probes INDETERMINATE); 4 numerical
  failure.  A failed certificate claim is reported in the output, not in
  the exit code.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ._version import __version__
from .errors import (
    BisectionError,
    ChartError,
    IntegrationError,
    ManifoldError,
    ParameterError,
    ProfileError,
    SeedError,
)
from .geometry import SeparatrixSurface, cycle_eval, proof_certificates
from .integrate import (
    BallEntry,
    Escape,
    IntegrationControls,
    convert_state,
    integrate,
)
from .model import (
    ModelParams,
    coefficient_pack,
    derived_constants,
    validate_params,
)
from .profiles import (
    LocalKind,
    direct_ode_solve,
    g_transform,
    local_expansion,
    profile_residual,
    reconstruct_profile,
    tail_exponent,
)
from .shooting import (
    SeedOrigin,
    SeedSpec,
    TransitionParameter,
    bisect_transition,
    classify_fate,
    seed,
    sweep,
    sweep_to_csv,
    sweep_to_jsonable,
)
from .vectorfields import (
    ChartId,
    chart_dim,
    chart_variables,
    finite_critical_points,
    infinity_critical_points,
)

__all__ = ["main"]


class _UsageError(Exception):
    """Invalid command-line input (maps to exit code 2)."""


# ---------------------------------------------------------------------------
# formatting helpers


def _g(value) -> str:
    """17-significant-digit decimal form of a float."""
    return format(float(value), ".17g")


def _gc(value: complex) -> str:
    """17-significant-digit form of a (possibly complex) eigenvalue."""
    z = complex(value)
    if z.imag == 0.0:
        return _g(z.real)
    sign = "+" if z.imag >= 0.0 else "-"
    return f"{_g(z.real)}{sign}{_g(abs(z.imag))}i"


def _opt_g(value) -> str:
    return "undefined" if value is None else _g(value)


def _csv_head(command: str, params: ModelParams, **extras) -> str:
    """The leading comment line carried by every CSV the CLI writes."""
    head = (
        f"# blowprof {__version__} {command}"
        f" m={_g(params.m)} N={_g(params.N)} sigma={_g(params.sigma)}"
    )
    for key, val in extras.items():
        head += f" {key}={val}"
    return head + "\n"


# ---------------------------------------------------------------------------
# option plumbing: registry of (dest -> (builtin default, converter)) per
# command, so a JSON config file can fill anything a flag did not set.


def _add(sub, registry, *flags, default=None, conv=None, **kwargs):
    action = sub.add_argument(*flags, **kwargs)
    caster = conv
    if caster is None:
        caster = kwargs.get("type") or (lambda v: v)
    registry[action.dest] = (default, caster)
    action.default = None
    return action


def _param_opts(sub, reg):
    _add(sub, reg, "--m", type=float, help="diffusion exponent m > 1")
    _add(sub, reg, "--N", type=float, help="dimension parameter N > 1")
    _add(sub, reg, "--sigma", type=float, help="weight exponent sigma >= 0")


def _tol_opts(sub, reg, span_default=None, span_help="eta budget of a run"):
    _add(sub, reg, "--rel-tol", type=float, default=1e-10,
         help="integrator relative tolerance (default 1e-10)")
    _add(sub, reg, "--abs-tol", type=float, default=1e-12,
         help="integrator absolute tolerance (default 1e-12)")
    if span_default is not None:
        _add(sub, reg, "--span", type=float, default=span_default,
             help=f"{span_help} (default {span_default:g})")


def _seed_opts(sub, reg):
    _add(sub, reg, "--epsilon", type=float, default=1e-6,
         help="seed offset from the base point, in (0, 1e-3] (default 1e-6)")
    _add(sub, reg, "--theta", type=float, default=-1.2,
         help="P0_UNSTABLE direction angle on the (X, H)-disk")
    _add(sub, reg, "--phi", type=float, default=math.pi / 4.0,
         help="Q1_OUT direction angle in the outgoing (z, w)-plane")
    _add(sub, reg, "--D", type=float, default=1.0,
         help="P1_BACKWARD beam parameter (Z = D*X^2 to leading order)")
    _add(sub, reg, "--x0", type=float, default=1e-3,
         help="NEAR_P3 X-offset")
    _add(sub, reg, "--r0", type=float, default=1e-2,
         help="NEAR_P3 rotation-plane radius")


def _detector_opts(sub, reg):
    _add(sub, reg, "--ball-radius", type=float, default=1e-4,
         help="point-entry detector radius (default 1e-4); forward "
              "interface connections sit on the double-precision shooting "
              "floor, so certifying them needs a wider ball, e.g. 5e-3 "
              "with --field-gate 0")
    _add(sub, reg, "--field-gate", type=float, default=1e-6,
         help="field-norm gate of the point-entry detector; 0 disables "
              "the gate (default 1e-6)")


_ORIGIN_ALIASES = {
    "P2": SeedOrigin.P2_E3,
    "P2_E3": SeedOrigin.P2_E3,
    "P0": SeedOrigin.P0_UNSTABLE,
    "P0_UNSTABLE": SeedOrigin.P0_UNSTABLE,
    "Q1": SeedOrigin.Q1_OUT,
    "Q1_OUT": SeedOrigin.Q1_OUT,
    "P1": SeedOrigin.P1_BACKWARD,
    "P1_BACKWARD": SeedOrigin.P1_BACKWARD,
    "Q5": SeedOrigin.Q5_OUT,
    "Q5_OUT": SeedOrigin.Q5_OUT,
    "P3": SeedOrigin.NEAR_P3,
    "NEAR_P3": SeedOrigin.NEAR_P3,
}


def _origin(name: str) -> SeedOrigin:
    try:
        return _ORIGIN_ALIASES[str(name).upper()]
    except KeyError:
        raise _UsageError(
            f"unknown origin {name!r}; choose from "
            f"{', '.join(sorted(set(_ORIGIN_ALIASES)))}"
        ) from None


def _build_parser():
    registry: dict[str, dict] = {}
    parser = argparse.ArgumentParser(
        prog="blowprof",
        description="Phase-space analysis of self-similar blow-up profiles: "
                    "reports, orbit runs, fate sweeps, transition bisections, "
                    "certificate audits and figure data.",
    )
    parser.add_argument(
        "--version", action="version", version=f"blowprof {__version__}"
    )
    subs = parser.add_subparsers(dest="command")

    def new(name, help_):
        sub = subs.add_parser(name, help=help_)
        reg: dict = {}
        registry[name] = reg
        sub.add_argument(
            "--config", type=str, default=None,
            help="JSON file of option defaults (explicit flags override it)",
        )
        return sub, reg

    # report ---------------------------------------------------------------
    sub, reg = new("report", "derived constants, critical points, "
                             "coefficients and certificate summary")
    _param_opts(sub, reg)
    _add(sub, reg, "--json", action="store_true", default=False,
         help="emit a JSON document instead of the text report")
    _add(sub, reg, "--out", type=str, help="directory to also write report.json into")

    # integrate ------------------------------------------------------------
    sub, reg = new("integrate", "run one orbit and write it as CSV")
    _param_opts(sub, reg)
    _add(sub, reg, "--chart", type=str, default="MAIN",
         choices=[c.name for c in ChartId],
         help="chart of an explicit --state (default MAIN)")
    _add(sub, reg, "--state", type=str,
         help="comma-separated initial state in --chart coordinates")
    _add(sub, reg, "--origin", type=str,
         help="seed origin instead of an explicit state: "
              "P2, P0, Q1, P1, Q5 or P3")
    _seed_opts(sub, reg)
    _add(sub, reg, "--direction", type=str, choices=["forward", "backward"],
         help="time direction (default: backward for P1 seeds, else forward)")
    _tol_opts(sub, reg, span_default=50.0)
    _add(sub, reg, "--out", type=str, default=".",
         help="output directory (default .)")
    _add(sub, reg, "--json", action="store_true", default=False,
         help="also write trajectory.json")

    # classify ---------------------------------------------------------------
    sub, reg = new("classify", "fate sweep over a parameter grid")
    _param_opts(sub, reg)
    _add(sub, reg, "--origin", type=str, help="seed origin (required)")
    _add(sub, reg, "--sigma-range", type=str,
         help="sigma grid lo:hi[:step] (default step (hi-lo)/20)")
    _add(sub, reg, "--angle-range", type=str,
         help="angle grid lo:hi[:step] (theta for P0 seeds, phi for Q1)")
    _add(sub, reg, "--D-range", type=str,
         help="backward-beam grid lo:hi[:step]")
    _add(sub, reg, "--values", type=str,
         help="explicit comma-separated grid (requires --parameter)")
    _add(sub, reg, "--parameter", type=str, choices=["sigma", "angle", "D"],
         help="which parameter --values sweeps")
    _seed_opts(sub, reg)
    _detector_opts(sub, reg)
    _tol_opts(sub, reg, span_default=1e4, span_help="eta budget per grid point")
    _add(sub, reg, "--workers", type=int, default=1,
         help="worker processes; grid order is preserved (default 1)")
    _add(sub, reg, "--out", type=str,
         help="directory for classify.csv and classify.json")
    _add(sub, reg, "--json", action="store_true", default=False,
         help="print the JSON rows to stdout instead of the table")

    # bisect -----------------------------------------------------------------
    sub, reg = new("bisect", "bracket the first fate transition in [lo, hi]")
    _param_opts(sub, reg)
    _add(sub, reg, "--origin", type=str, help="seed origin (required)")
    _add(sub, reg, "--parameter", type=str, default="sigma",
         choices=["sigma", "angle", "D"],
         help="bisected parameter (default sigma)")
    _add(sub, reg, "--lo", type=float, help="lower end of the bracket")
    _add(sub, reg, "--hi", type=float, help="upper end of the bracket")
    _add(sub, reg, "--tol", type=float, default=1e-3,
         help="target bracket width (default 1e-3)")
    _seed_opts(sub, reg)
    _detector_opts(sub, reg)
    _tol_opts(sub, reg, span_default=1e4, span_help="eta budget per probe")
    _add(sub, reg, "--out", type=str, default=".",
         help="directory for bracket.json (default .)")

    # certify ----------------------------------------------------------------
    sub, reg = new("certify", "evaluate the closed-form sign certificates")
    _param_opts(sub, reg)
    _add(sub, reg, "--json", action="store_true", default=False,
         help="emit a JSON document instead of the table")
    _add(sub, reg, "--out", type=str, help="directory to write certify.json into")

    # profile ----------------------------------------------------------------
    sub, reg = new("profile", "emit a radial profile f(xi) as CSV + JSON")
    _param_opts(sub, reg)
    _add(sub, reg, "--origin", type=str,
         help="phase route: record the orbit from this seed origin on the "
              "primary chart (P2, P0, P1 or P3) and invert it")
    _add(sub, reg, "--anchor", type=str,
         help="direct route: sweep the profile equation in xi from this "
              "endpoint expansion ("
              + ", ".join(k.name for k in LocalKind) + ")")
    _add(sub, reg, "--constant", type=float,
         help="free constant of the --anchor expansion (kinds with a rigid "
              "coefficient take none)")
    _add(sub, reg, "--xi-span", type=str,
         help="direct route xi window lo:hi (required with --anchor)")
    _add(sub, reg, "--delta", type=float,
         help="direct route start offset from the anchor's singular point")
    _add(sub, reg, "--samples", type=int,
         help="resample the direct route onto this many log-spaced points")
    _add(sub, reg, "--eta-step", type=float,
         help="phase route: resample the orbit at this uniform eta spacing")
    _add(sub, reg, "--eta-budget", type=float, default=200.0,
         help="phase route eta budget (default 200)")
    _add(sub, reg, "--ball-radius", type=float, default=1e-3,
         help="phase route terminal ball radius at the interface/tail "
              "points (default 1e-3)")
    _seed_opts(sub, reg)
    _add(sub, reg, "--g-diagnostics", action="store_true", default=False,
         help="add oscillation diagnostics (G-extrema, tail exponent) "
              "to profile.json")
    _tol_opts(sub, reg)
    _add(sub, reg, "--out", type=str, default=".",
         help="output directory (default .)")

    # figure -----------------------------------------------------------------
    sub, reg = new("figure", "plot-ready CSV bundle for figure 1, 2 or 3")
    sub.add_argument("id", nargs="?", type=int, choices=[1, 2, 3],
                     default=None, help="figure number")
    reg["id"] = (None, int)
    _param_opts(sub, reg)
    _seed_opts(sub, reg)
    _tol_opts(sub, reg, span_default=60.0, span_help="eta budget per orbit")
    _add(sub, reg, "--out", type=str, default=".",
         help="output directory (default .)")

    return parser, registry


def _merge_config(args, registry) -> None:
    """Resolve each option as: explicit flag > config file > built-in."""
    reg = registry[args.command]
    cfg: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise _UsageError(f"cannot read config file {path}: {e}") from None
        except json.JSONDecodeError as e:
            raise _UsageError(f"config file {path} is not valid JSON: {e}") from None
        if not isinstance(raw, dict):
            raise _UsageError(f"config file {path} must hold a JSON object")
        cfg = {str(k).replace("-", "_"): v for k, v in raw.items()}
        unknown = sorted(set(cfg) - set(reg))
        if unknown:
            raise _UsageError(
                f"config file {path} has options unknown to "
                f"'{args.command}': {', '.join(unknown)}"
            )
    for dest, (default, caster) in reg.items():
        if getattr(args, dest, None) is None:
            value = cfg.get(dest, default)
            if value is not None and dest in cfg:
                try:
                    value = caster(value)
                except (TypeError, ValueError) as e:
                    raise _UsageError(
                        f"config option {dest!r}: {e}"
                    ) from None
            setattr(args, dest, value)


def _params_from(args, *, sigma=None) -> ModelParams:
    missing = [name for name in ("m", "N") if getattr(args, name) is None]
    sigma = args.sigma if sigma is None else sigma
    if sigma is None:
        missing.append("sigma")
    if missing:
        raise _UsageError(
            "missing required option(s): " + ", ".join(f"--{x}" for x in missing)
        )
    return validate_params(args.m, args.N, sigma)


def _spec_from(args, origin: SeedOrigin) -> SeedSpec:
    return SeedSpec(
        origin=origin,
        epsilon=args.epsilon,
        theta=args.theta,
        phi=args.phi,
        D=args.D,
        x0=args.x0,
        r0=args.r0,
    )


def _parse_range(text: str, label: str) -> list[float]:
    parts = str(text).split(":")
    if len(parts) not in (2, 3):
        raise _UsageError(f"{label} must be lo:hi or lo:hi:step, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) == 3 else (hi - lo) / 20.0
    except ValueError:
        raise _UsageError(f"{label}: non-numeric entry in {text!r}") from None
    if not (hi > lo):
        raise _UsageError(f"{label}: need lo < hi, got {text!r}")
    if not step > 0.0:
        raise _UsageError(f"{label}: need step > 0, got {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    values = [lo + i * step for i in range(count)]
    if abs(values[-1] - hi) <= 1e-9 * step:
        values[-1] = hi
    return values


def _parse_values(text: str) -> list[float]:
    try:
        values = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise _UsageError(f"--values: non-numeric entry in {text!r}") from None
    if len(values) < 1:
        raise _UsageError("--values: empty grid")
    if any(b < a for a, b in zip(values, values[1:])):
        raise _UsageError("--values: grid must be sorted ascending")
    return values


def _outdir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# report


def _k1_critical(params: ModelParams, K1: float) -> bool:
    scale = 2.0 * (params.m - 1.0) * (params.N - 1.0) \
        + (3.0 * params.m + 1.0) * params.sigma
    return abs(K1) <= 1e-6 * max(1.0, scale)


def _pack_rows(pack) -> list[tuple[str, str]]:
    rows = []
    for name in ("K1", "K2", "K3", "lambda3_P2", "l_sigma"):
        value = getattr(pack, name)
        if name == "K3" and value is None:
            rows.append((name, "undefined (K1 = 0)"))
        else:
            rows.append((name, _g(value)))
    rows.append(("e3", "(" + ", ".join(_g(v) for v in pack.e3) + ")"))
    for name in ("A", "B", "C", "D", "E", "F"):
        rows.append((name, _g(getattr(pack, name))))
    for name in ("X0_sq", "U0_sq"):
        value = getattr(pack, name)
        if value is None:
            rows.append((name, "undefined (degenerate denominator)"))
        else:
            rows.append((name, _g(value)))
    for name in ("K_mNsigma", "U1_sq", "X1_sq", "L_sigma", "R_sigma"):
        rows.append((name, _g(getattr(pack, name))))
    return rows


def _report_doc(params: ModelParams) -> dict:
    dc = derived_constants(params)
    pack = coefficient_pack(params)
    cert = proof_certificates(params)
    points = finite_critical_points(params) + infinity_critical_points(params)
    return {
        "tool": "blowprof",
        "version": __version__,
        "command": "report",
        "params": {
            "m": params.m,
            "N": params.N,
            "sigma": params.sigma,
            "physical": params.physical,
        },
        "derived": {
            "sigma_c": dc.sigma_c,
            "h0": dc.h0,
            "n_star": dc.n_star,
            "sigma_c_at_nstar": dc.sigma_c_at_nstar,
            "alpha": dc.alpha,
        },
        "k1_critical": _k1_critical(params, pack.K1),
        "critical_points": [
            {
                "id": pt.id.value,
                "chart": pt.chart.name,
                "location": list(pt.location),
                "spectrum": [[z.real, z.imag] for z in pt.spectrum],
                "dims": list(pt.dims),
                "notes": pt.notes,
                "merged_node": pt.merged_node,
            }
            for pt in points
        ],
        "coefficients": {
            name: (
                list(value) if isinstance(value, tuple) else value
            )
            for name, value in (
                (f.name, getattr(pack, f.name))
                for f in pack.__dataclass_fields__.values()
            )
        },
        "certificates": {
            "all_in_range_pass": cert.all_in_range_pass,
            "claims": cert.to_jsonable(),
        },
    }


def _cmd_report(args) -> int:
    params = _params_from(args)
    doc = _report_doc(params)
    if args.out:
        out = _outdir(args) / "report.json"
        out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    if args.json:
        print(json.dumps(doc, indent=2))
        return 0

    dc = derived_constants(params)
    pack = coefficient_pack(params)
    cert = proof_certificates(params)
    critical = doc["k1_critical"]

    lines = [f"blowprof {__version__} report"]
    phys = "physical dimension" if params.physical else "non-integer dimension"
    lines.append(
        f"params: m = {_g(params.m)}, N = {_g(params.N)}, "
        f"sigma = {_g(params.sigma)}   ({phys})"
    )
    lines.append("derived:")
    lines.append(f"  sigma_c = {_g(dc.sigma_c)}")
    lines.append(f"  h0 = {_g(dc.h0)}")
    lines.append(f"  n_star = {_g(dc.n_star)}")
    lines.append(f"  sigma_c_at_nstar = {_g(dc.sigma_c_at_nstar)}")
    lines.append(f"  alpha = {_g(dc.alpha)}")
    if critical:
        lines.append(
            "  regime: critical (sigma ≈ sigma_c, K1 ≈ 0: the hyperbola "
            "exponent K3 is undefined or divergent here)"
        )
    elif params.sigma < dc.sigma_c:
        lines.append("  regime: subcritical (sigma < sigma_c)")
    else:
        lines.append("  regime: supercritical (sigma > sigma_c)")

    lines.append("critical points:")
    for pt in finite_critical_points(params) + infinity_critical_points(params):
        loc = ", ".join(_g(v) for v in pt.location)
        merged = "  [merged escape node]" if pt.merged_node else ""
        lines.append(f"  {pt.id.value:<2} @ {pt.chart.name:<8} ({loc}){merged}")
        lines.append(
            "       spectrum: " + ", ".join(_gc(z) for z in pt.spectrum)
        )
        s, u, c = pt.dims
        lines.append(
            f"       dims (stable, unstable, center) = ({s}, {u}, {c})   {pt.notes}"
        )

    lines.append("coefficients:")
    for name, value in _pack_rows(pack):
        suffix = ""
        if name == "K1" and critical:
            suffix = "   [critical: K1 ≈ 0]"
        lines.append(f"  {name:<10} = {value}{suffix}")

    n_claims = len(cert.claims)
    n_in = sum(1 for c in cert.claims if c.in_range)
    verdict = (
        "all in-range claims pass"
        if cert.all_in_range_pass
        else "FAILURES among in-range claims"
    )
    lines.append(f"certificates: {n_in} of {n_claims} claims in range; {verdict}")
    for c in cert.claims:
        status = "n/a " if c.passed is None else ("pass" if c.passed else "FAIL")
        lines.append(
            f"  [{status}] {c.claim:<34} value={_opt_g(c.value):<24} "
            f"expected {c.expected_sign:<8} on {c.range}"
        )
    print("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# integrate


def _cmd_integrate(args) -> int:
    params = _params_from(args)
    if (args.state is None) == (args.origin is None):
        raise _UsageError("give exactly one of --state or --origin")

    origin_label = "-"
    if args.state is not None:
        chart = ChartId[args.chart]
        try:
            y0 = np.array([float(v) for v in str(args.state).split(",")])
        except ValueError:
            raise _UsageError(f"--state: non-numeric entry in {args.state!r}") from None
        if y0.size != chart_dim(chart):
            raise _UsageError(
                f"--state needs {chart_dim(chart)} components for "
                f"{chart.name} {chart_variables(chart)}, got {y0.size}"
            )
        direction = args.direction or "forward"
    else:
        org = _origin(args.origin)
        origin_label = org.value
        chart, y0 = seed(_spec_from(args, org), params)
        direction = args.direction or (
            "backward" if org is SeedOrigin.P1_BACKWARD else "forward"
        )

    controls = IntegrationControls(
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        max_span=args.span,
        direction=direction,
    )
    traj = integrate(chart, y0, params, controls, record=True)

    out = _outdir(args)
    csv_path = out / "trajectory.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(_csv_head(
            "integrate", params,
            chart=chart.name, direction=direction, origin=origin_label,
        ))
        traj.to_csv(fh)
    written = [str(csv_path)]
    if args.json:
        json_path = out / "trajectory.json"
        with open(json_path, "w", encoding="utf-8") as fh:
            traj.to_json(fh)
        written.append(str(json_path))

    state = ", ".join(_g(v) for v in traj.final_state)
    print(
        f"integrated {chart.name} orbit ({direction}): status={traj.status} "
        f"steps={traj.nsteps} eta_end={_g(traj.final_eta)} state_end=({state})"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# classify


def _classify_point(payload):
    """Worker-pool entry: classify one grid point in a fresh process."""
    (pname, value, origin, eps, theta, phi, D, x0, r0,
     m, N, sigma, ball, gate, rel, abs_, span) = payload
    params = validate_params(m, N, sigma)
    spec = SeedSpec(
        origin=SeedOrigin(origin), epsilon=eps, theta=theta, phi=phi,
        D=D, x0=x0, r0=r0,
    )
    controls = IntegrationControls(rel_tol=rel, abs_tol=abs_, max_span=span)
    return sweep(
        TransitionParameter(pname), [value], spec, params, controls,
        ball_radius=ball, field_gate=gate,
    )[0]


def _resolve_grid(args) -> tuple[TransitionParameter, list[float]]:
    chosen = [
        (name, text)
        for name, text in (
            ("SIGMA", args.sigma_range),
            ("ANGLE", args.angle_range),
            ("D", args.D_range),
        )
        if text is not None
    ]
    if args.values is not None:
        if args.parameter is None:
            raise _UsageError("--values needs --parameter {sigma,angle,D}")
        chosen.append((args.parameter.upper(), None))
    if len(chosen) != 1:
        raise _UsageError(
            "give exactly one grid: --sigma-range, --angle-range, "
            "--D-range, or --values with --parameter"
        )
    name, text = chosen[0]
    if text is None:
        values = _parse_values(args.values)
    else:
        values = _parse_range(text, f"--{name.lower()}-range")
    return TransitionParameter(name), values


def _cmd_classify(args) -> int:
    if args.origin is None:
        raise _UsageError("missing required option --origin")
    org = _origin(args.origin)
    parameter, values = _resolve_grid(args)
    if parameter is TransitionParameter.SIGMA:
        params = _params_from(args, sigma=args.sigma if args.sigma is not None
                              else values[0])
    else:
        params = _params_from(args)
    spec = _spec_from(args, org)
    controls = IntegrationControls(
        rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_span=args.span
    )

    if args.workers and args.workers > 1:
        payloads = [
            (parameter.value, v, org.value, args.epsilon, args.theta,
             args.phi, args.D, args.x0, args.r0,
             params.m, params.N, params.sigma,
             args.ball_radius, args.field_gate,
             args.rel_tol, args.abs_tol, args.span)
            for v in values
        ]
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_classify_point, payloads))
    else:
        results = sweep(
            parameter, values, spec, params, controls,
            ball_radius=args.ball_radius, field_gate=args.field_gate,
        )

    n_indet = sum(1 for _, rep in results if rep.fate.value == "INDETERMINATE")
    unreliable = n_indet > 0.5 * len(results)

    doc = {
        "tool": "blowprof",
        "version": __version__,
        "command": "classify",
        "params": {"m": params.m, "N": params.N, "sigma": params.sigma},
        "origin": org.value,
        "parameter": parameter.value,
        "epsilon": args.epsilon,
        "ball_radius": args.ball_radius,
        "field_gate": args.field_gate,
        "n_indeterminate": n_indet,
        "rows": sweep_to_jsonable(results),
    }

    written = []
    if args.out:
        out = _outdir(args)
        csv_path = out / "classify.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(_csv_head(
                "classify", params,
                origin=org.value, parameter=parameter.value,
                epsilon=_g(args.epsilon), ball_radius=_g(args.ball_radius),
                field_gate=_g(args.field_gate),
            ))
            sweep_to_csv(results, fh)
        json_path = out / "classify.json"
        json_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        written = [str(csv_path), str(json_path)]

    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        print(
            f"classify origin={org.value} parameter={parameter.value} "
            f"points={len(values)} (m={_g(params.m)}, N={_g(params.N)}, "
            f"sigma={_g(params.sigma)})"
        )
        print(f"{'value':>24}  {'fate':<14} {'node':<5} {'class':<18} reason")
        for v, rep in results:
            node = rep.terminal_node or "-"
            pclass = rep.profile_class.value if rep.profile_class else "-"
            line = (
                f"{_g(v):>24}  {rep.fate.value:<14} {node:<5} {pclass:<18} "
                f"{rep.reason or ''}"
            )
            print(line.rstrip())
        tally: dict[str, int] = {}
        for _, rep in results:
            tally[rep.fate.value] = tally.get(rep.fate.value, 0) + 1
        print("fates: " + ", ".join(f"{k} x{n}" for k, n in tally.items()))
        if unreliable:
            print(
                f"warning: {n_indet} of {len(results)} grid points are "
                "INDETERMINATE - classification unreliable"
            )
    for path in written:
        print(f"wrote {path}")
    return 3 if unreliable else 0


# ---------------------------------------------------------------------------
# bisect


def _cmd_bisect(args) -> int:
    if args.origin is None:
        raise _UsageError("missing required option --origin")
    if args.lo is None or args.hi is None:
        raise _UsageError("missing required option(s): --lo, --hi")
    org = _origin(args.origin)
    parameter = TransitionParameter(args.parameter.upper())
    if parameter is TransitionParameter.SIGMA:
        params = _params_from(args, sigma=args.sigma if args.sigma is not None
                              else args.lo)
    else:
        params = _params_from(args)
    spec = _spec_from(args, org)
    controls = IntegrationControls(
        rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_span=args.span
    )

    bracket = bisect_transition(
        parameter, spec, args.lo, args.hi, args.tol, params, controls,
        ball_radius=args.ball_radius, field_gate=args.field_gate,
    )

    doc = {
        "tool": "blowprof",
        "version": __version__,
        "command": "bisect",
        "params": {"m": params.m, "N": params.N, "sigma": params.sigma},
        "origin": org.value,
        "epsilon": args.epsilon,
        "ball_radius": args.ball_radius,
        "field_gate": args.field_gate,
        "tol": args.tol,
        **bracket.to_jsonable(),
    }
    out = _outdir(args) / "bracket.json"
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    print(
        f"transition bracket for {parameter.value}, origin {org.value}: "
        f"[{_g(bracket.lo)}, {_g(bracket.hi)}]"
    )
    print(
        f"  width={_g(bracket.width)}  probes={bracket.probes}  "
        f"fate_lo={bracket.fate_lo.value}  fate_hi={bracket.fate_hi.value}"
    )
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# certify


def _cmd_certify(args) -> int:
    params = _params_from(args)
    cert = proof_certificates(params)
    doc = {
        "tool": "blowprof",
        "version": __version__,
        "command": "certify",
        "params": {"m": params.m, "N": params.N, "sigma": params.sigma},
        "all_in_range_pass": cert.all_in_range_pass,
        "claims": cert.to_jsonable(),
    }
    if args.out:
        out = _outdir(args) / "certify.json"
        out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {out}")
    if args.json:
        print(json.dumps(doc, indent=2))
        return 0
    print(
        f"certificates at m={_g(params.m)}, N={_g(params.N)}, "
        f"sigma={_g(params.sigma)}:"
    )
    for c in cert.claims:
        status = "n/a " if c.passed is None else ("pass" if c.passed else "FAIL")
        print(
            f"  [{status}] {c.claim:<34} value={_opt_g(c.value):<24} "
            f"expected {c.expected_sign:<8} on {c.range}"
        )
    n_in = sum(1 for c in cert.claims if c.in_range)
    verdict = (
        "all in-range claims pass"
        if cert.all_in_range_pass
        else "FAILURES among in-range claims"
    )
    print(f"{n_in} of {len(cert.claims)} claims in range; {verdict}")
    return 0


# ---------------------------------------------------------------------------
# profile


def _phase_route_curve(args, params: ModelParams, org: SeedOrigin):
    if org in (SeedOrigin.Q1_OUT, SeedOrigin.Q5_OUT):
        raise _UsageError(
            f"{org.value} orbits start at infinity, outside the invertible "
            "chart; use the direct route (--anchor FLAT_Q1 / ASYMPTOTE_Q5) "
            "for those profiles"
        )
    spec = _spec_from(args, org)
    chart, y0 = seed(spec, params)
    direction = "backward" if org is SeedOrigin.P1_BACKWARD else "forward"
    h0 = derived_constants(params).h0
    events = [
        BallEntry(center=(0.0, -h0, 0.0), radius=args.ball_radius,
                  field_gate=0.0, terminal=True, label="P1"),
        BallEntry(center=(0.0, 0.0, 1.0), radius=args.ball_radius,
                  field_gate=0.0, terminal=True, label="P3"),
        Escape(threshold=1e3),
    ]
    controls = IntegrationControls(
        rel_tol=args.rel_tol, abs_tol=args.abs_tol,
        max_span=args.eta_budget, direction=direction,
    )
    traj = integrate(chart, y0, params, controls, events, record=True)
    return reconstruct_profile(
        traj, eta_step=args.eta_step, source=f"shoot:{org.value}"
    )


def _direct_route_curve(args, params: ModelParams):
    try:
        kind = LocalKind[str(args.anchor).upper()]
    except KeyError:
        raise _UsageError(
            f"unknown anchor {args.anchor!r}; choose from "
            + ", ".join(k.name for k in LocalKind)
        ) from None
    if args.xi_span is None:
        raise _UsageError("--anchor needs --xi-span lo:hi")
    parts = str(args.xi_span).split(":")
    if len(parts) != 2:
        raise _UsageError(f"--xi-span must be lo:hi, got {args.xi_span!r}")
    try:
        span = (float(parts[0]), float(parts[1]))
    except ValueError:
        raise _UsageError(f"--xi-span: non-numeric entry in {args.xi_span!r}") from None
    anchor = local_expansion(kind, args.constant, params)
    return direct_ode_solve(
        params, anchor, span,
        delta=args.delta, rel_tol=args.rel_tol, abs_tol=args.abs_tol,
        samples=args.samples,
    )


def _cmd_profile(args) -> int:
    params = _params_from(args)
    if (args.origin is None) == (args.anchor is None):
        raise _UsageError("give exactly one of --origin or --anchor")
    if args.origin is not None:
        curve = _phase_route_curve(args, params, _origin(args.origin))
    else:
        curve = _direct_route_curve(args, params)

    doc = dict(curve.annotations())
    doc["command"] = "profile"
    if curve.n >= 4:
        residual = profile_residual(curve)
        scale = (
            1.0
            + curve.f / (params.m - 1.0)
            + curve.xi ** params.sigma * curve.f ** params.m
        )
        doc["residual_sup"] = float(np.max(np.abs(residual)))
        doc["residual_rel_sup"] = float(np.max(np.abs(residual) / scale))
    if args.g_diagnostics and np.all(curve.f > 0.0):
        gt = g_transform(curve)
        doc["g_diagnostics"] = {
            "zeta_range": [float(gt.zeta[0]), float(gt.zeta[-1])],
            "n_extrema": len(gt.extrema),
            "amplitudes_strictly_decreasing": gt.amplitudes_strictly_decreasing,
            "tail_exponent": tail_exponent(curve),
            "tail_exponent_expected": -params.sigma / (params.m - 1.0),
        }

    out = _outdir(args)
    csv_path = out / "profile.csv"
    curve.to_csv(csv_path)
    json_path = out / "profile.json"
    json_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    tags = []
    if curve.origin_tag:
        tags.append(f"origin={curve.origin_tag}")
    if curve.tail_tag:
        tags.append(f"tail={curve.tail_tag}")
    if curve.interface_xi is not None:
        tags.append(f"interface_xi={_g(curve.interface_xi)}")
    print(
        f"profile: {curve.n} samples on xi in [{_g(curve.xi[0])}, "
        f"{_g(curve.xi[-1])}]" + ("  " + " ".join(tags) if tags else "")
    )
    if "residual_rel_sup" in doc:
        print(f"residual (relative sup) = {_g(doc['residual_rel_sup'])}")
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return 0


# ---------------------------------------------------------------------------
# figure


def _record_main_path(spec: SeedSpec, params: ModelParams, *,
                      eta_budget: float, rel_tol: float, abs_tol: float):
    """Record an orbit and return its primary-chart samples.

    Seeds living in a chart at infinity are integrated there first and the
    recorded points converted through the coordinate dictionary; once the
    run hands off toward the finite region, a second leg continues on the
    primary chart (the eta column concatenates the per-leg clocks, which
    differ by a positive rescaling - monotone, plot-ready).
    """
    chart, y0 = seed(spec, params)
    direction = "backward" if spec.origin is SeedOrigin.P1_BACKWARD else "forward"
    h0 = derived_constants(params).h0
    rows: list[tuple[float, float, float, float]] = []
    eta_off = 0.0

    if chart is not ChartId.MAIN:
        controls = IntegrationControls(
            rel_tol=rel_tol, abs_tol=abs_tol, max_span=eta_budget,
            direction=direction,
        )
        leg = integrate(chart, y0, params, controls, [], record=True)
        for eta, st in zip(leg.etas, leg.states):
            try:
                xyz = convert_state(chart, ChartId.MAIN, st, params)
            except ChartError:
                continue
            if np.all(np.isfinite(xyz)) and np.max(np.abs(xyz)) <= 1e6:
                rows.append((float(eta), *map(float, xyz)))
        if leg.status != "handoff":
            return rows
        try:
            y0 = convert_state(chart, ChartId.MAIN, leg.final_state, params)
        except ChartError:
            return rows
        if not (np.all(np.isfinite(y0)) and np.max(np.abs(y0)) < 1e3
                and y0[0] >= 0.0 and y0[2] >= 0.0):
            return rows
        eta_off = float(leg.final_eta)

    events = [
        BallEntry(center=(0.0, -h0, 0.0), radius=1e-3, field_gate=0.0,
                  terminal=True, label="P1"),
        BallEntry(center=(0.0, 0.0, 1.0), radius=1e-3, field_gate=0.0,
                  terminal=True, label="P3"),
        Escape(threshold=1e3),
    ]
    controls = IntegrationControls(
        rel_tol=rel_tol, abs_tol=abs_tol, max_span=eta_budget,
        direction=direction,
    )
    leg = integrate(ChartId.MAIN, y0, params, controls, events, record=True)
    rows.extend(
        (eta_off + float(eta), *map(float, st))
        for eta, st in zip(leg.etas, leg.states)
    )
    return rows


def _write_orbit_csv(path: Path, tag: str, params: ModelParams,
                     spec: SeedSpec, fate: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_csv_head(tag, params, origin=spec.origin.value, fate=fate))
        fh.write("eta,X,Y,Z\n")
        for eta, X, Y, Z in rows:
            fh.write(f"{_g(eta)},{_g(X)},{_g(Y)},{_g(Z)}\n")


def _figure_orbits(args, params: ModelParams, origins, tag: str, out: Path,
                   *, min_dist_center=None):
    """Record, classify and write one orbit file per origin; return fate rows."""
    written = []
    fate_rows = []
    for org in origins:
        spec = _spec_from(args, org)
        rep = classify_fate(spec, params)
        rows = _record_main_path(
            spec, params, eta_budget=args.span,
            rel_tol=args.rel_tol, abs_tol=args.abs_tol,
        )
        path = out / f"{tag}_orbit_{org.value}.csv"
        _write_orbit_csv(path, tag, params, spec, rep.fate.value, rows)
        written.append(path)
        row = [org.value, rep.fate.value, rep.terminal_node or "-",
               rep.profile_class.value if rep.profile_class else "-",
               _g(rep.eta_span)]
        if min_dist_center is not None:
            center = np.asarray(min_dist_center)
            if rows:
                pts = np.array([[X, Y, Z] for _, X, Y, Z in rows])
                dmin = float(np.min(np.linalg.norm(pts - center, axis=1)))
            else:
                dmin = float("nan")
            row.append(_g(dmin))
        fate_rows.append(row)
    return written, fate_rows


def _write_fates_csv(path: Path, tag: str, params: ModelParams,
                     columns: str, fate_rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_csv_head(tag, params))
        fh.write(columns + "\n")
        for row in fate_rows:
            fh.write(",".join(row) + "\n")


def _cmd_figure_1(args, out: Path) -> list[Path]:
    from scipy.optimize import brentq

    params = validate_params(
        args.m if args.m is not None else 2.0,
        args.N if args.N is not None else 4.0,
        args.sigma if args.sigma is not None else 0.5,
    )
    m = params.m
    z_top = 2.0 * m / (m + 1.0)
    k_center = (m - 1.0) / (m * (m + 1.0))
    k_values = [0.0] + [f * k_center for f in (0.2, 0.4, 0.6, 0.8)]

    path = out / "figure1_cycles.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_csv_head("figure1", params, K_center=_g(k_center)))
        fh.write("K,Z,Y\n")
        for K in k_values:
            if K == 0.0:
                zs = np.linspace(0.0, z_top, 401)
                ysq = 2.0 / (m + 1.0) - zs / m
            else:
                power = (m + 1.0) / (m - 1.0)
                z_peak = (K * power * m) ** (1.0 / (power + 1.0))
                a = z_peak
                for _ in range(200):
                    if cycle_eval(a, K, params) < 0.0:
                        break
                    a *= 0.5
                z_lo = brentq(lambda z: cycle_eval(z, K, params), a, z_peak)
                z_hi = brentq(lambda z: cycle_eval(z, K, params), z_peak, z_top)
                zs = np.linspace(z_lo, z_hi, 401)
                ysq = np.array([cycle_eval(z, K, params) for z in zs])
            ys = np.sqrt(np.maximum(ysq, 0.0))
            for z, y in zip(zs, ys):
                fh.write(f"{_g(K)},{_g(z)},{_g(y)}\n")
            for z, y in zip(zs[::-1], ys[::-1]):
                fh.write(f"{_g(K)},{_g(z)},{_g(-y)}\n")
    return [path]


_FIG2_SIGMAS = (0.5, 0.84)
_FIG2_ORIGINS = (
    SeedOrigin.P2_E3,
    SeedOrigin.P0_UNSTABLE,
    SeedOrigin.Q1_OUT,
    SeedOrigin.Q5_OUT,
    SeedOrigin.P1_BACKWARD,
    SeedOrigin.NEAR_P3,
)


def _cmd_figure_2(args, out: Path) -> list[Path]:
    written: list[Path] = []
    for sigma in _FIG2_SIGMAS:
        params = validate_params(
            args.m if args.m is not None else 2.0,
            args.N if args.N is not None else 4.0,
            sigma,
        )
        tag = f"figure2_sigma{sigma:g}"
        orbit_paths, fate_rows = _figure_orbits(
            args, params, _FIG2_ORIGINS, tag, out
        )
        written.extend(orbit_paths)
        fates_path = out / f"{tag}_fates.csv"
        _write_fates_csv(
            fates_path, tag, params,
            "origin,fate,terminal_node,profile_class,eta_span", fate_rows,
        )
        written.append(fates_path)
    return written


_FIG3_ORIGINS = (
    SeedOrigin.P2_E3,
    SeedOrigin.P0_UNSTABLE,
    SeedOrigin.P1_BACKWARD,
)


def _cmd_figure_3(args, out: Path) -> list[Path]:
    params = validate_params(
        args.m if args.m is not None else 2.0,
        args.N if args.N is not None else 4.0,
        args.sigma if args.sigma is not None else 5.0,
    )
    h0 = derived_constants(params).h0
    written, fate_rows = _figure_orbits(
        args, params, _FIG3_ORIGINS, "figure3", out,
        min_dist_center=(0.0, -h0, 0.0),
    )
    fates_path = out / "figure3_fates.csv"
    _write_fates_csv(
        fates_path, "figure3", params,
        "origin,fate,terminal_node,profile_class,eta_span,min_dist_P1",
        fate_rows,
    )
    written.append(fates_path)

    surface = SeparatrixSurface(params)
    xs = np.linspace(0.0, 1.5, 61)
    ys = np.linspace(-1.2, 1.2, 61)
    surf_path = out / "figure3_surface.csv"
    with open(surf_path, "w", encoding="utf-8") as fh:
        fh.write(_csv_head("figure3", params, content="separatrix_surface"))
        fh.write("X,Y,Z\n")
        for X in xs:
            for Y in ys:
                fh.write(f"{_g(X)},{_g(Y)},{_g(surface.evaluate(X, Y))}\n")
    written.append(surf_path)
    return written


def _cmd_figure(args) -> int:
    if args.id is None:
        raise _UsageError("missing figure id (1, 2 or 3)")
    out = _outdir(args)
    if args.id == 1:
        written = _cmd_figure_1(args, out)
    elif args.id == 2:
        written = _cmd_figure_2(args, out)
    else:
        written = _cmd_figure_3(args, out)
    for path in written:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# entry point


_HANDLERS = {
    "report": _cmd_report,
    "integrate": _cmd_integrate,
    "classify": _cmd_classify,
    "bisect": _cmd_bisect,
    "certify": _cmd_certify,
    "profile": _cmd_profile,
    "figure": _cmd_figure,
}


def main(argv=None) -> int:
    parser, registry = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        _merge_config(args, registry)
        return _HANDLERS[args.command](args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SeedError, ChartError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except BisectionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3 if e.code == "TOO_MANY_INDETERMINATE" else 2
    except ProfileError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2 if e.code == "BAD_CONSTANTS" else 4
    except (IntegrationError, ManifoldError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2 if e.code == "INADMISSIBLE_START" else 4
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
