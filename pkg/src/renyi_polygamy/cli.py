"""Command-line front end: ``measure``, ``scan``, ``figures`` and ``verify``.

Results go to stdout (JSON) or to files; logs go to stderr. Exit codes:
0 success, 1 a violation was found, 2 usage or configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import lemma, measures, polygamy, roof, states

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

SCAN_IDS = {
    "g": ("g", "D"),
    "h-D1": ("h", "D1"),
    "h-D2": ("h", "D2"),
    "m": ("m", "D3"),
    "critical-h": ("h", "D1"),
    "critical-m": ("m", "D3"),
}

log = logging.getLogger("renyi_polygamy")


class UsageError(Exception):
    pass


def default_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _budget(args, base: roof.OptBudget | None = None) -> roof.OptBudget:
    base = base or roof.OptBudget()
    changes = {}
    if args.restarts is not None:
        changes["restarts"] = args.restarts
    if args.tol is not None:
        changes["tol"] = args.tol
    if args.max_sweeps is not None:
        changes["max_sweeps"] = args.max_sweeps
    try:
        return replace(base, **changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_state(spec: str):
    path = Path(spec)
    if path.exists():
        return states.load_state(path)
    name = spec.partition(":")[0].lower()
    if name in ("bell", "ghz", "w", "product"):
        try:
            return states.parse_named(spec)
        except (states.StateError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    raise FileNotFoundError(f"no such state file: {spec}")


# -- measure -------------------------------------------------------------------


def cmd_measure(args) -> int:
    state = _load_state(args.state)
    n = state.n_qubits
    focus = args.focus
    if not 0 <= focus < n:
        raise UsageError(f"--focus {focus} out of range for {n} qubits")
    alphas = [measures.alpha_value(a) for a in (args.alpha or [])]
    budget = _budget(args)
    pure = isinstance(state, states.PureState)
    rho = states.as_density(state)
    red = rho.reduced([focus])

    out = {"n_qubits": n, "kind": "pure" if pure else "density", "focus": focus, "alphas": alphas}
    if pure and n >= 2:
        out["concurrence"] = measures.concurrence_pure_bipartition(state, [focus])
    elif n == 2:
        out["concurrence"] = measures.concurrence_mixed_2q(rho)
    else:
        out["concurrence"] = None
    out["renyi_entropy"] = [measures.renyi_entropy(red, a) for a in alphas]
    if pure:
        out["renyi_entanglement"] = [measures.renyi_entropy(red, a) for a in alphas]
    elif n == 2:
        out["renyi_entanglement"] = [
            measures.renyi_entanglement_2q(rho, a) if a >= measures.ALPHA_MIN else None for a in alphas
        ]
    else:
        out["renyi_entanglement"] = [None for _ in alphas]

    pairs = []
    for partner in range(n):
        if partner == focus:
            continue
        pair = polygamy._pair_state(rho, n, focus, partner)
        reoa = [
            roof.reoa(pair, a, budget, args.seed).value if a >= measures.ALPHA_MIN else None for a in alphas
        ]
        pairs.append({"qubits": [focus, partner], "coa": roof.coa_exact(pair), "reoa_lower_bound": reoa})
    out["pairs"] = pairs
    _emit(out)
    return EXIT_OK


# -- scan ----------------------------------------------------------------------


def cmd_scan(args) -> int:
    function, domain = SCAN_IDS[args.lemma]
    critical = args.lemma.startswith("critical")
    if args.step is None:
        step = 5e-3 if critical else (lemma.STEP_2D if function == "g" else lemma.STEP_1D)
    else:
        step = args.step
    try:
        lemma.check_step(step)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tol = args.tol if args.tol is not None else lemma.SIGN_TOL

    if critical:
        if step > 1e-2:
            raise UsageError(f"critical-point scans need --step <= 1e-2, got {step}")
        report = lemma.critical_point_scan(function, domain, step)
        path = out_dir / f"scan_{args.lemma}.csv"
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["partial", "alpha", "x"])
            for name, pts in report.contours.items():
                for a, x in pts:
                    writer.writerow([name, lemma.FLOAT_FMT % a, lemma.FLOAT_FMT % x])
        summary = {**report.to_dict(), "path": str(path), "ok": report.ok}
        _emit(summary)
        return EXIT_OK if report.ok else EXIT_VIOLATION

    path = out_dir / f"scan_{args.lemma}.csv"
    report = lemma.scan_sign(function, domain, step, tol, out=path)
    _emit(report.to_dict())
    return EXIT_OK if report.ok else EXIT_VIOLATION


# -- figures -------------------------------------------------------------------


def cmd_figures(args) -> int:
    ids = args.ids or list(lemma.FIGURE_IDS)
    for i in ids:
        if i not in lemma.FIGURE_IDS:
            raise UsageError(f"unknown figure id {i!r}; expected one of {', '.join(lemma.FIGURE_IDS)}")
    step_1d = args.step if args.step is not None else lemma.STEP_1D
    step_2d = args.step_2d if args.step_2d is not None else lemma.STEP_2D
    try:
        lemma.check_step(step_1d)
        lemma.check_step(step_2d)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    manifest = lemma.emit_figures(ids, args.out, step_1d, step_2d)
    _emit(json.loads(manifest.read_text()) | {"manifest": str(manifest)})
    return EXIT_OK


# -- verify --------------------------------------------------------------------


def default_config_text() -> str:
    return resources.files("renyi_polygamy").joinpath("data/default_campaign.json").read_text()


def cmd_verify(args) -> int:
    if args.config:
        cfg = polygamy.load_config(args.config)
    else:
        cfg = polygamy.config_from_dict(json.loads(default_config_text()))
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.alpha:
        changes["alphas"] = tuple(args.alpha)
    if args.mu:
        changes["mus"] = tuple(args.mu)
    changes["budget"] = _budget(args, cfg.budget)
    # re-validate so overrides obey the same rules as the file
    cfg = polygamy.config_from_dict({**cfg.to_dict(), **_as_config_fields(changes)})
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    _, summary = polygamy.run_campaign(cfg, args.out, threads)
    _emit({k: v for k, v in summary.items() if k != "config"} | {"out": str(args.out)})
    return EXIT_VIOLATION if summary["verdicts"]["VIOLATION"] else EXIT_OK


def _as_config_fields(changes: dict) -> dict:
    out = {}
    for key, value in changes.items():
        if key == "budget":
            out["budget"] = {f: getattr(value, f) for f in roof.OptBudget.__dataclass_fields__}
        elif isinstance(value, tuple):
            out[key] = list(value)
        else:
            out[key] = value
    return out


# -- parser --------------------------------------------------------------------


def _budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=int, help="random starts per roof optimization (default 32)")
    p.add_argument("--max-sweeps", type=int, help="coordinate sweeps per start before the polish")
    p.add_argument("--tol", type=float, help="convergence or sign tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renyi-polygamy", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="entanglement measures of one state")
    p.add_argument("state", help="state JSON file, or a named state such as bell, ghz:3, w:3, product:2")
    p.add_argument("--alpha", type=float, action="append", help="Renyi order (repeatable)")
    p.add_argument("--focus", type=int, default=0, help="qubit cut from the rest (default 0)")
    p.add_argument("--seed", type=int, default=0)
    _budget_flags(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("scan", help="sign or critical-point scan of a lemma function")
    p.add_argument("lemma", choices=sorted(SCAN_IDS))
    p.add_argument("--step", type=float, help="grid step in [1e-4, 1e-1]")
    p.add_argument("--tol", type=float, help="sign tolerance (default 1e-9)")
    p.add_argument("--out", default=".", help="directory for the CSV output")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("figures", help="CSV data behind the lemma figures")
    p.add_argument("ids", nargs="*", help=f"figure ids (default all: {' '.join(lemma.FIGURE_IDS)})")
    p.add_argument("--step", type=float, help="step of 1-D curves (default 1e-3)")
    p.add_argument("--step-2d", type=float, help="step of 2-D grids (default 2e-3)")
    p.add_argument("--out", default="figures", help="output directory")
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("verify", help="run a verification campaign")
    p.add_argument("config", nargs="?", help="campaign JSON (default: the shipped configuration)")
    p.add_argument("--out", default="verify-out", help="directory for report.jsonl and summary.json")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, action="append", help="replace the alpha grid (repeatable)")
    p.add_argument("--mu", type=float, action="append", help="replace the mu grid (repeatable)")
    p.add_argument("--threads", type=int, help="worker threads (default: available CPUs)")
    _budget_flags(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, polygamy.ConfigError, measures.AlphaRangeError, states.StateFileError, states.StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
