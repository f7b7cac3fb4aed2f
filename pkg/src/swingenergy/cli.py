"""Command line front end.

Subcommands mirror the library: simulate (trajectory CSV), energy (energy
CSV plus event and conservation JSON), equilibria (SEP/UEP JSON), cct
(bisection JSON), pes (potential-energy surface CSV), report (assessment
as text or JSON). Exit codes: 0 success, 2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .assessment import build_report, cct_to_json_dict, find_cct, report_to_json_dict, report_to_text
from .energy import (
    GridSpec,
    conservation_report,
    divergence_check,
    energy_trace_to_csv,
    events_to_json_dict,
    find_idsp_idlp,
    find_smpp,
    machine_energy_trace,
    pes_sample,
    pes_to_csv,
)
from .equilibria import equilibrium_to_dict, solve_sep, solve_uep, uep_energy
from .errors import (
    CensoredError,
    MarginError,
    ReductionError,
    ScenarioError,
    SolverError,
)
from .model import Scenario, bundled_scenario_path, scenario_from_dict
from .simulator import integrate, trajectory_to_csv

CONSERVATION_SCHEMA = "swingenergy.conservation/1"
EQUILIBRIA_SCHEMA = "swingenergy.equilibria/1"


def _load_document(source: str) -> dict:
    """Read a scenario document from a file path or a bundled name."""
    path = source
    if not os.path.exists(path):
        path = bundled_scenario_path(source)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{source}: not valid JSON: {exc}") from None


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    doc = _load_document(args.scenario)
    fault_bus = getattr(args, "fault_bus", None)
    if fault_bus is not None:
        network = doc.get("network")
        if not isinstance(network, dict) or "buses" not in network:
            raise ScenarioError(
                "--fault-bus needs bus-level network data; this document "
                "carries pre-reduced matrices"
            )
        doc.setdefault("fault", {})["bus"] = fault_bus
    scenario = scenario_from_dict(doc)
    return scenario.with_overrides(
        clearing_time=getattr(args, "clearing_time", None),
        dt=getattr(args, "dt", None),
        horizon=getattr(args, "horizon", None),
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    trajectory = integrate(scenario)
    _emit(trajectory_to_csv(trajectory), args.out)
    return 0


def cmd_energy(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    trajectory = integrate(scenario)
    trace = machine_energy_trace(trajectory)
    events = [find_smpp(trace)] + find_idsp_idlp(trajectory, trace)

    base = args.out
    if base.endswith(".csv"):
        base = base[: -len(".csv")]
    _emit(energy_trace_to_csv(trace), base + ".csv")
    _emit(_json_text(events_to_json_dict(events, trace)), base + ".events.json")

    rep = conservation_report(trace)
    div = divergence_check(trace)
    conservation = {
        "schema": CONSERVATION_SCHEMA,
        "scenario": scenario.name,
        "settings": trace.settings_meta(),
        "reference": rep.reference,
        "max_drift": rep.max_drift,
        "relative_drift": rep.relative_drift,
        "window": list(rep.window),
        "per_machine": {
            str(mid): float(d)
            for mid, d in zip(trace.machine_ids, rep.per_machine)
        },
        "divergence": {
            "system_unbounded": div.system_unbounded,
            "machine_status": {str(k): v for k, v in div.machine_status.items()},
            "threshold": div.threshold,
            "censored": div.censored,
        },
    }
    _emit(_json_text(conservation), base + ".conservation.json")
    return 0


def cmd_equilibria(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    sep = solve_sep(scenario, args.stage)
    out = {
        "schema": EQUILIBRIA_SCHEMA,
        "scenario": scenario.name,
        "settings": {"stage": args.stage},
        "sep": equilibrium_to_dict(sep),
        "uep": None,
    }
    if args.reflect:
        reflect = _int_list(args.reflect, "--reflect")
        uep = solve_uep(scenario, reflect, stage=args.stage)
        out["uep"] = equilibrium_to_dict(uep)
        out["uep_energy"] = uep_energy(scenario, sep, uep, substeps=args.substeps)
        out["settings"]["reflect"] = reflect
        out["settings"]["substeps"] = args.substeps
    _emit(_json_text(out), args.out)
    return 0


def cmd_cct(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    bracket = _pair(args.bracket, "--bracket")
    result = find_cct(
        scenario,
        bracket,
        resolution=args.resolution,
        horizon=args.horizon,
        jobs=args.jobs,
    )
    _emit(_json_text(cct_to_json_dict(result, scenario)), args.out)
    return 0


def cmd_pes(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    axes = _int_list(args.axes, "--axes")
    if len(axes) != 2:
        raise ScenarioError("--axes takes exactly two machine ids")
    grid = GridSpec.from_degrees_string(args.grid)
    surface = pes_sample(
        scenario, (axes[0], axes[1]), grid, substeps=args.substeps, jobs=args.jobs
    )
    _emit(pes_to_csv(surface), args.out)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    trajectory = integrate(scenario)
    report = build_report(trajectory)
    if args.format == "json":
        _emit(_json_text(report_to_json_dict(report)), args.out)
    else:
        _emit(report_to_text(report), args.out)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def _pair(text: str, flag: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise ScenarioError(f"{flag} expects lo:hi, got {text!r}") from None


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p != ""]
    except ValueError:
        raise ScenarioError(f"{flag} expects comma-separated machine ids") from None


def _add_scenario_args(p: argparse.ArgumentParser, overrides: bool = True) -> None:
    p.add_argument(
        "--scenario",
        required=True,
        help="scenario JSON file, or a bundled name (ts3_ninebus, ts10_newengland)",
    )
    p.add_argument(
        "--fault-bus",
        type=int,
        default=None,
        help="move the fault to this bus (bus-level documents only; the "
        "document's trip_branch is kept)",
    )
    if overrides:
        p.add_argument("--clearing-time", type=float, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--horizon", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swingenergy",
        description="transient energy analysis for multi-machine swing models",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the swing equations, write trajectory CSV")
    _add_scenario_args(p)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "energy",
        help="energy traces, events, and conservation (CSV + two JSON files)",
    )
    _add_scenario_args(p)
    p.add_argument(
        "--out",
        required=True,
        help="base path; writes BASE.csv, BASE.events.json, BASE.conservation.json",
    )
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("equilibria", help="solve stable/unstable equilibria, write JSON")
    _add_scenario_args(p, overrides=False)
    p.add_argument(
        "--stage",
        choices=["prefault", "faulton", "postfault"],
        default="postfault",
    )
    p.add_argument(
        "--reflect",
        default=None,
        help="comma-separated machine ids to reflect for the UEP guess",
    )
    p.add_argument("--substeps", type=int, default=1000, help="ray quadrature substeps")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("cct", help="critical clearing time by bisection, write JSON")
    _add_scenario_args(p, overrides=False)
    p.add_argument("--dt", type=float, default=None, help="integration step for probes")
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--bracket", required=True, help="lo:hi clearing times in seconds")
    p.add_argument("--resolution", type=float, default=0.001)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_cct)
    p.add_argument("--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("pes", help="sample the potential-energy surface, write CSV")
    _add_scenario_args(p, overrides=False)
    p.add_argument("--axes", required=True, help="two machine ids, e.g. 2,3")
    p.add_argument(
        "--grid",
        required=True,
        help="a_min:a_max:steps,b_min:b_max:steps in degrees, offsets from "
        "the post-fault equilibrium",
    )
    p.add_argument("--substeps", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_pes)

    p = sub.add_parser("report", help="full stability assessment (text or JSON)")
    _add_scenario_args(p)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, ReductionError, CensoredError, MarginError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
