"""Command-line front end.

Usage::

    gronwall-lab [run] SUBCOMMAND [flags]
    gronwall-lab [run] CONFIG.toml [--seed S] [--workers W] [--out DIR] [--format F]

Exit status: 0 when every verdict is PASS, 1 when any experiment fails
(failures are numbered in the summary), 2 on usage or validation errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import tomli

from .estimate import PASS
from .verify import (
    CONSTANT_COLUMNS,
    MODELS,
    SCENARIOS,
    SCHEMA_VERSION,
    ExperimentResult,
    ExperimentSpec,
    run_experiment,
)

SEED_ENV = "GRONWALL_LAB_SEED"
FORMATS = ("csv", "json")

SUBCOMMANDS = {
    "constants": "Constants",
    "prop1": "Prop1",
    "sharpness": "Remark2Sharpness",
    "divergence": "Remark3Divergence",
    "jump": "Remark3Jump",
    "gronwall": "Gronwall",
    "estim": "Estim",
    "ladder": "LadderChain",
}
_DETERMINISTIC = {"Constants", "Remark3Jump"}
_TABLE_TARGETS = {"Constants", "Remark3Divergence", "Remark3Jump", "Estim",
                  "Remark2Sharpness", "LadderChain"}

REPORT_COLUMNS = ("report", "lhs_mean", "lhs_half_width", "rhs_mean", "rhs_half_width",
                  "constant", "margin", "verdict")
SUMMARY_COLUMNS = ("index", "name", "target", "verdict", "summary")

CSV_HELP = f"""\
CSV outputs:
  constants          {", ".join(CONSTANT_COLUMNS)}
  divergence         K, mc_mean, half_width, log1p_K, quadrature, covers
  jump               q, delta, ratio
  estim              dt, max_violation, max_sign_violation, rms_qv_residual
  sharpness          p, ratio_mc, half_width, ratio_exact, c_p, gap_factor, identity_error
  ladder             p, c, gamma, lhs_mc, half_width, lhs_exact, chain_bound, levels_used
  prop1, gronwall    {", ".join(REPORT_COLUMNS)}
  summary.csv        {", ".join(SUMMARY_COLUMNS)}
"""


class ConfigError(ValueError):
    """Invalid configuration; carries a location prefix when one is known."""


@dataclass
class RunConfig:
    experiments: list[ExperimentSpec]
    seed: Optional[int]
    workers: int = 1
    out: Optional[Path] = None
    formats: tuple[str, ...] = FORMATS
    lines: list[int] = field(default_factory=list)


# -- argument parsing --------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help=f"global seed (fallback: ${SEED_ENV})")
    p.add_argument("--workers", type=int, default=None, help="experiments run concurrently")
    p.add_argument("--out", type=Path, help="write one report per experiment plus a summary here")
    p.add_argument("--format", help="csv, json or csv,json")


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--p-grid", dest="p_grid")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--b", type=float, help="barrier / upper exit level")
    p.add_argument("--a", type=float, help="lower exit level")
    p.add_argument("--sigma", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--K-grid", dest="K_grid")
    p.add_argument("--q", dest="q_grid", help="q value or grid")
    p.add_argument("--delta-grid", dest="delta_grid")
    p.add_argument("--psi", help=f"constant rate psi or scenario name ({', '.join(SCENARIOS)})")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--x0", type=float)
    p.add_argument("--dt-grid", dest="dt_grid")
    p.add_argument("--threshold", type=float)
    p.add_argument("--c", type=float, help="ladder base level")
    p.add_argument("--gamma", type=float, help="ladder ratio")
    p.add_argument("--depth", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gronwall-lab",
        description="Closed forms and Monte-Carlo checks of a martingale inequality "
                    "and stochastic Gronwall bounds.",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, target in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"{target} experiment", epilog=CSV_HELP,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_common(sp)
        _add_params(sp)
    sp = sub.add_parser("all", help="run the built-in suite")
    _add_common(sp)
    sp.add_argument("--n", type=int, help="override every sample size")
    sp = sub.add_parser("config", help="run experiments from a TOML file")
    sp.add_argument("config", type=Path)
    _add_common(sp)
    sp.add_argument("--n", type=int, help="override every sample size")
    return parser


def _normalise_argv(argv: Sequence[str]) -> list[str]:
    argv = list(argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    if argv and not argv[0].startswith("-") and argv[0] not in (*SUBCOMMANDS, "all", "config"):
        argv = ["config", *argv]
    return argv


# -- experiment assembly ----------------------------------------------------


_PARAM_FLAGS = ("p_grid", "model", "b", "a", "sigma", "horizon", "K_grid", "q_grid",
                "delta_grid", "scenario", "x0", "dt_grid", "threshold", "c", "gamma", "depth")


def _spec_from_args(args, seed: int) -> ExperimentSpec:
    target = SUBCOMMANDS[args.command]
    params = {k: getattr(args, k) for k in _PARAM_FLAGS if getattr(args, k) is not None}
    if args.psi is not None:
        try:
            params["psi"] = float(args.psi)
        except ValueError:
            params["scenario"] = args.psi
    kw = {k: getattr(args, k) for k in ("p", "mu", "nu", "n", "dt") if getattr(args, k) is not None}
    return ExperimentSpec(name=args.command, target=target, seed=seed, params=params, **kw)


def builtin_suite(seed: int, n: Optional[int] = None) -> list[ExperimentSpec]:
    """Experiments run by ``all``; sample sizes are kept at desk scale."""
    exact, grid = n or 200_000, n or 20_000
    specs = [
        ("constants", "Constants", {}, {}),
        ("sharpness_p025", "Remark2Sharpness", {"p": 0.25, "n": exact}, {}),
        ("sharpness_p050", "Remark2Sharpness", {"p": 0.5, "n": exact}, {}),
        ("divergence", "Remark3Divergence", {"n": exact}, {}),
        ("jump", "Remark3Jump", {"p": 0.5}, {}),
        ("ladder_p025", "LadderChain", {"p": 0.25, "n": exact}, {"c": 0.1, "gamma": 1.5}),
        ("ladder_p050", "LadderChain", {"p": 0.5, "n": exact}, {"c": 0.1, "gamma": 4.0}),
    ]
    for p in (0.1, 0.25, 0.5, 0.9):
        for model in ("stopped-bm", "exit-bm", "sigma-integral"):
            size = exact if model == "stopped-bm" else grid
            tag = f"prop1_{model.replace('-', '_')}_p{int(round(p * 100)):03d}"
            specs.append((tag, "Prop1", {"p": p, "n": size}, {"model": model}))
    for scn in SCENARIOS:
        specs.append((f"gronwall_{scn.replace('-', '_')}", "Gronwall",
                      {"p": 0.2, "nu": 2.0, "n": grid}, {"scenario": scn}))
    specs.append(("estim", "Estim", {"n": 1000}, {}))
    return [
        ExperimentSpec(name=name, target=t, seed=seed, stream_id=i, params=prm, **kw)
        for i, (name, t, kw, prm) in enumerate(specs)
    ]


_SPEC_KEYS = {"name", "target", "p", "mu", "nu", "n", "dt"}


def _header_lines(text: str) -> list[int]:
    return [i + 1 for i, line in enumerate(text.splitlines())
            if re.match(r"^\s*\[\[\s*experiment\s*\]\]", line)]


def load_config(path: Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    lines = _header_lines(text)
    raw = doc.get("experiment", [])
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: no [[experiment]] tables found")
    unknown = set(doc) - {"seed", "workers", "out", "formats", "experiment"}
    if unknown:
        raise ConfigError(f"{path}:1: unknown top-level keys {sorted(unknown)}")
    seed = doc.get("seed")
    specs, names = [], set()
    for i, table in enumerate(raw):
        where = f"{path}:{lines[i] if i < len(lines) else 1}"
        name = table.get("name")
        if not name:
            raise ConfigError(f"{where}: experiment needs a name")
        if name in names:
            raise ConfigError(f"{where}: duplicate experiment name {name!r}")
        names.add(name)
        if "target" not in table:
            raise ConfigError(f"{where}: experiment {name!r} needs a target")
        kw = {k: table[k] for k in _SPEC_KEYS if k in table}
        params = {k: v for k, v in table.items() if k not in _SPEC_KEYS}
        try:
            spec = ExperimentSpec(seed=0, stream_id=i, params=params, **kw)
            spec.validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: experiment {name!r}: {exc}") from None
        specs.append(spec)
    formats = doc.get("formats", list(FORMATS))
    return RunConfig(specs, seed, int(doc.get("workers", 1)),
                     Path(doc["out"]) if "out" in doc else None, tuple(formats), lines)


# -- output -----------------------------------------------------------------


def _parse_formats(text: Optional[str], default: Sequence[str]) -> tuple[str, ...]:
    if text is None:
        return tuple(default)
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise ConfigError(f"--format must be csv, json or csv,json, got {text!r}")
    return fmts


def _csv_text(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def result_csv(res: ExperimentResult) -> str:
    if res.table:
        return _csv_text(res.table["columns"], res.table["rows"])
    rows = [[key, r.lhs.mean, r.lhs.half_width, r.rhs.mean, r.rhs.half_width,
             r.constant, r.margin, r.verdict] for key, r in res.reports.items()]
    return _csv_text(REPORT_COLUMNS, rows)


def result_json(res: ExperimentResult) -> str:
    return json.dumps(res.to_dict(), indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def summary_rows(results: Sequence[ExperimentResult]) -> list[list]:
    return [[i + 1, r.name, r.target, r.verdict, r.summary] for i, r in enumerate(results)]


def write_outputs(results: Sequence[ExperimentResult], out: Path, formats: Sequence[str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        if "json" in formats:
            (out / f"{res.name}.json").write_text(result_json(res), encoding="utf-8")
        if "csv" in formats:
            (out / f"{res.name}.csv").write_text(result_csv(res), encoding="utf-8", newline="")
    rows = summary_rows(results)
    failed = [row[0] for row in rows if row[3] != PASS]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "all_pass": not failed,
        "failed": failed,
        "experiments": [dict(zip(SUMMARY_COLUMNS, row)) for row in rows],
    }
    if "json" in formats:
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if "csv" in formats:
        (out / "summary.csv").write_text(_csv_text(SUMMARY_COLUMNS, rows), encoding="utf-8",
                                         newline="")


# -- driver ------------------------------------------------------------------


def _resolve_seed(flag: Optional[int], config: Optional[int] = None) -> Optional[int]:
    if flag is not None:
        return flag
    if config is not None:
        return int(config)
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None


def execute(specs: Sequence[ExperimentSpec], workers: int = 1) -> list[ExperimentResult]:
    """Run experiments on a thread pool; results come back in input order."""
    workers = max(1, int(workers))
    if workers == 1:
        return [run_experiment(s) for s in specs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_experiment, specs))


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _normalise_argv(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "config":
            cfg = load_config(args.config)
            seed = _resolve_seed(args.seed, cfg.seed)
            if seed is None:
                raise ConfigError(f"{args.config}: seed is mandatory (config key, --seed or ${SEED_ENV})")
            specs = [_with(s, seed=seed, n=args.n) for s in cfg.experiments]
            workers = args.workers if args.workers is not None else cfg.workers
            out = args.out or cfg.out
            formats = _parse_formats(args.format, cfg.formats)
        elif args.command == "all":
            seed = _resolve_seed(args.seed)
            if seed is None:
                raise ConfigError(f"seed is mandatory (--seed or ${SEED_ENV})")
            specs = builtin_suite(seed, args.n)
            workers, out = args.workers or 1, args.out
            formats = _parse_formats(args.format, FORMATS if out else ("json",))
        else:
            target = SUBCOMMANDS[args.command]
            seed = _resolve_seed(args.seed)
            if seed is None:
                if target not in _DETERMINISTIC:
                    raise ConfigError(f"seed is mandatory (--seed or ${SEED_ENV})")
                seed = 0
            spec = _spec_from_args(args, seed)
            spec.validate()
            specs = [spec]
            workers, out = args.workers or 1, args.out
            default = FORMATS if out else (("csv",) if target in _TABLE_TARGETS else ("json",))
            formats = _parse_formats(args.format, default)
    except ValueError as exc:
        print(f"gronwall-lab: error: {exc}", file=sys.stderr)
        return 2

    try:
        results = execute(specs, workers)
    except ValueError as exc:
        print(f"gronwall-lab: error: {exc}", file=sys.stderr)
        return 2

    if out is not None:
        write_outputs(results, out, formats)
        for i, res in enumerate(results, 1):
            print(f"[{i}/{len(results)}] {res.name}: {res.verdict}  {res.summary}")
    else:
        for res in results:
            if "json" in formats:
                sys.stdout.write(result_json(res))
            if "csv" in formats:
                sys.stdout.write(result_csv(res))
            print(f"{res.name}: {res.verdict}  {res.summary}", file=sys.stderr)

    failed = [i for i, r in enumerate(results, 1) if r.verdict != PASS]
    if failed:
        names = ", ".join(f"#{i} {results[i - 1].name}" for i in failed)
        print(f"gronwall-lab: {len(failed)} experiment(s) failed: {names}", file=sys.stderr)
        return 1
    return 0


def _with(spec: ExperimentSpec, seed: int, n: Optional[int]) -> ExperimentSpec:
    return ExperimentSpec(spec.name, spec.target, seed, n if n is not None else spec.n, spec.p,
                          spec.mu, spec.nu, spec.dt, spec.stream_id, dict(spec.params))


if __name__ == "__main__":
    raise SystemExit(main())
