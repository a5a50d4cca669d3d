"""Command-line front end.

    nfsgates spectrum   --config run.yaml --t0 22.6 --output neg.csv
    nfsgates search     --gate negation
    nfsgates delay-plan --common-t0 6.9
    nfsgates split-plan --gate negation
    nfsgates cnot       --n-trials 1000 --seed 7

Every artifact carries the resolved configuration: spectra get an adjacent
``.json`` file, reports embed it under ``run_config``.  Exit codes: 0 ok,
1 configuration error, 2 infeasible search or plan, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import gates
from .config import (
    ConfigError,
    Resolved,
    RunConfig,
    apply_override,
    build_config,
    load_config,
    parse_assignment,
)
from .scattering.series import series_spectrum
from .scattering.slices import ResolutionError, propagate

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3

# flag -> dotted config key
_FLAG_KEYS = {
    "xi": "xi",
    "input_pol": "input_pol",
    "solver": "solver",
    "p_max": "p_max",
    "n_slices": "n_slices",
    "t0": "protocol.t0",
    "gate": "search.gate",
    "common_t0": "plan.common_t0",
    "detection_probability": "trigger.detection_probability",
    "n_trials": "n_trials",
    "seed": "seed",
    "output": "output",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems are configuration errors
        _fail(EXIT_CONFIG, "usage", message)


def _fail(code: int, kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    raise SystemExit(code)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nfsgates", description="Polarization gates by switched nuclear forward scattering.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("spectrum", "search", "delay-plan", "split-plan", "cnot"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON or YAML run configuration")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key, e.g. trigger.latency=0.5")
        p.add_argument("--output", help="output path (reports go to stdout when omitted)")
        p.add_argument("--xi", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--solver", choices=("series", "slices"))
        p.add_argument("--p-max", type=int)
        p.add_argument("--n-slices", type=int)
        if name == "spectrum":
            p.add_argument("--input-pol")
            p.add_argument("--t0", type=float)
        if name in ("search", "delay-plan", "split-plan"):
            p.add_argument("--gate")
        if name == "delay-plan":
            p.add_argument("--common-t0", type=float)
        if name == "cnot":
            p.add_argument("--n-trials", type=int)
            p.add_argument("--detection-probability", type=float)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = load_config(args.config)
    for text in args.set:
        apply_override(data, *parse_assignment(text))
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            apply_override(data, key, value)
    return build_config(data)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _dump(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def _emit_report(payload: dict, config: RunConfig) -> None:
    payload = dict(payload, run_config=config.model_dump(mode="json"))
    text = _dump(payload)
    if config.output:
        Path(config.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def run_spectrum(config: RunConfig) -> Path:
    res = Resolved(config)
    s = res.setup
    if config.solver == "slices":
        spec = propagate(config.input_pol, config.xi, config.n_slices, s.grid, res.protocol, species=s.species)
    else:
        spec = series_spectrum(
            config.input_pol, config.xi, config.p_max, s.grid, res.protocol,
            species=s.species, after_switch=True,
        )
    out = Path(config.output or "spectrum.csv")
    spec.to_csv(out)
    echo = config.model_copy(update={"output": str(out)})
    out.with_suffix(".json").write_text(_dump(echo.model_dump(mode="json")), encoding="utf-8")
    return out


def run_search(config: RunConfig) -> dict:
    res = Resolved(config)
    q = config.search
    return gates.search_switch_time(
        res.gate, q.window, q.step, config.xi, q.purity_threshold, setup=res.setup
    ).to_dict()


def run_delay_plan(config: RunConfig) -> dict:
    res = Resolved(config)
    q = config.search
    return gates.delay_line_plan(
        res.gate, config.plan.common_t0, config.xi, window=q.window, step=q.step,
        purity_threshold=q.purity_threshold, tolerance=config.plan.tolerance, setup=res.setup,
    ).to_dict()


def run_split_plan(config: RunConfig) -> dict:
    res = Resolved(config)
    q = config.search
    return gates.split_path_plan(
        res.gate, config.xi, window=q.window, step=q.step,
        purity_threshold=q.purity_threshold, setup=res.setup,
    ).to_dict()


def run_cnot(config: RunConfig) -> dict:
    res = Resolved(config)
    rows = gates.cnot_truth_table(res.trigger, config.n_trials, config.seed, config.xi, setup=res.setup)
    return {"rows": [row.to_dict() for row in rows], "seed": config.seed, "n_trials": config.n_trials}


_REPORTS = {
    "search": run_search,
    "delay-plan": run_delay_plan,
    "split-plan": run_split_plan,
    "cnot": run_cnot,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        if args.command == "spectrum":
            run_spectrum(config)
        else:
            _emit_report(_REPORTS[args.command](config), config)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, "config", str(exc))
    except (gates.SwitchTimeNotFound, gates.InfeasiblePlan) as exc:
        _fail(EXIT_INFEASIBLE, "infeasible", str(exc))
    except (ResolutionError, FloatingPointError, gates.DegenerateWindowError) as exc:
        _fail(EXIT_NUMERIC, "numerical", str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
