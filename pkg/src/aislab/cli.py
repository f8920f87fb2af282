"""Command-line entry point: ``aislab <subcommand> [flags]``.

Subcommands: gen, run, bench, sweep, negsel, ainet.  A YAML file given with
``--config`` supplies defaults; explicit flags always win.  Any failure
prints one ``aislab: error: <reason>`` line on stderr and exits with status 2.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import bench, datasets
from .shape_space import ShapeSpaceError, seeded_rng

POLICIES = {"impute": "impute_mean", "drop": "drop", "impute_median": "impute_median"}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def parse_value(text: str):
    """Interpret a flag value as YAML scalar (int, float, bool or string)."""
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError:
        return text
    return text if value is None or isinstance(value, (dict, list)) else value


def parse_params(items) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise CliError(f"--param expects key=value, got {item!r}")
        params[key.strip()] = parse_value(value.strip())
    return params


def parse_sweep(text):
    if text is None:
        return None
    if isinstance(text, dict):
        if len(text) != 1:
            raise CliError("sweep must name exactly one parameter")
        (key, values), = text.items()
        return key, list(values)
    key, sep, values = str(text).partition("=")
    if not sep or not key:
        raise CliError(f"--sweep expects key=v1,v2,..., got {text!r}")
    vals = [parse_value(v.strip()) for v in values.split(",") if v.strip()]
    if not vals:
        raise CliError(f"--sweep {key} has no values")
    return key.strip(), vals


def _common(p: argparse.ArgumentParser, algo: bool = True, repeats: bool = True):
    if algo:
        p.add_argument("--algo", choices=bench.ALGORITHMS, default=None, help="algorithm to run")
    p.add_argument("--dataset", default=None, help="preset name, built-in set or CSV path")
    p.add_argument("--seed", type=int, default=None, help="base seed (run i uses seed + i)")
    if repeats:
        p.add_argument("--repeats", type=int, default=None, help="number of seeded runs")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--param", action="append", default=None, metavar="KEY=VALUE",
                   help="algorithm parameter (repeatable)")
    p.add_argument("--missing-policy", choices=sorted(POLICIES), default=None,
                   help="missing-value handling for the breast cancer loader")
    p.add_argument("--data-seed", type=int, default=None, help="seed for regenerated presets")
    p.add_argument("--workers", type=int, default=None, help="concurrent repeats")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.add_argument("--config", default=None, help="YAML file with defaults for these flags")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aislab", description="Artificial immune system experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen", help="write a dataset preset to CSV")
    _common(g, algo=False, repeats=False)

    for name, text in (("run", "one seeded run"), ("bench", "repeated runs with summary statistics")):
        _common(sub.add_parser(name, help=text))

    s = sub.add_parser("sweep", help="aggregate a metric over parameter values")
    _common(s)
    s.add_argument("--sweep", default=None, metavar="KEY=V1,V2,...")
    s.add_argument("--metric", choices=("generations", "score"), default=None)

    _common(sub.add_parser("negsel", help="detector training and monitoring over a series"), algo=False)
    _common(sub.add_parser("ainet", help="train an immune network and extract MST clusters"), algo=False)
    return parser


def _settings(args) -> dict:
    cfg = {}
    if args.config:
        try:
            loaded = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}".replace("\n", " ")) from None
        if not isinstance(loaded, dict):
            raise CliError(f"config {args.config} must hold a mapping")
        cfg = {k.replace("-", "_"): v for k, v in loaded.items()}
    params = dict(cfg.get("params") or {})
    params.update(parse_params(args.param))
    merged = {k: v for k, v in cfg.items() if k != "params"}
    for key in ("algo", "dataset", "seed", "repeats", "out", "missing_policy", "data_seed", "workers", "sweep",
                "metric"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    merged["params"] = params
    return merged


def _require(settings, key, command):
    if settings.get(key) is None:
        raise CliError(f"{command} needs --{key.replace('_', '-')}")
    return settings[key]


def _experiment(settings, algo, command, repeats_default=1) -> bench.ExperimentConfig:
    policy = settings.get("missing_policy", "impute")
    if policy not in POLICIES and policy not in POLICIES.values():
        raise CliError(f"unknown missing policy {policy!r}")
    return bench.ExperimentConfig(
        algorithm=algo,
        dataset=str(_require(settings, "dataset", command)),
        params=settings["params"],
        repeats=int(settings.get("repeats", repeats_default)),
        base_seed=int(settings.get("seed", 0)),
        sweep=parse_sweep(settings.get("sweep")),
        outputs=settings.get("out"),
        missing_policy=POLICIES.get(policy, policy),
        data_seed=int(settings.get("data_seed", 0)),
        workers=int(settings.get("workers", 1)),
        figures=not settings.get("no_figures", False),
    )


def cmd_gen(settings) -> dict:
    name = _require(settings, "dataset", "gen")
    out = Path(_require(settings, "out", "gen"))
    seed = int(settings.get("seed", 0))
    params = settings["params"]
    rng = seeded_rng(seed)
    if name in datasets.PRESETS:
        spec = datasets.PRESETS[name]
        if "count" in params:
            spec = spec.resized(int(params["count"]))
        ds = datasets.gen_gaussian_mixture(spec, rng, name=name)
    elif name in datasets.SHAPE_DEFAULT_COUNTS:
        kw = {"noise": float(params.get("noise", 0.0))}
        if "counts" in params:
            kw["counts"] = tuple(int(c) for c in str(params["counts"]).split(","))
        if "radii" in params:
            kw["radii"] = tuple(float(r) for r in str(params["radii"]).split(","))
        ds = datasets.gen_shapes(name, rng, **kw)
    else:
        policy = POLICIES.get(settings.get("missing_policy", "impute"), "impute_mean")
        ds = datasets.load_dataset(name, rng, policy)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True)
    datasets.write_csv(ds, out)
    return {"dataset": name, "rows": len(ds), "dims": ds.dims, "out": str(out)}


def _summary_dict(summary: bench.Summary) -> dict:
    return json.loads(summary.to_json())


def cmd_experiment(settings, command) -> dict:
    algo = {"negsel": "negsel", "ainet": "ainet"}.get(command) or _require(settings, "algo", command)
    repeats_default = 1
    cfg = _experiment(settings, algo, command, repeats_default)
    if command == "run":
        cfg.repeats = 1
    summary, _ = bench.run_experiment(cfg)
    return _summary_dict(summary)


def cmd_sweep(settings) -> dict:
    algo = _require(settings, "algo", "sweep")
    if settings.get("sweep") is None:
        raise CliError("sweep needs --sweep key=v1,v2,...")
    cfg = _experiment(settings, algo, "sweep")
    rows = bench.run_sweep(cfg, settings.get("metric", "generations"))
    return {"parameter": cfg.sweep[0],
            "rows": [{"value": r.value, "mean": r.mean, "median": r.median, "runs": r.runs} for r in rows]}


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise CliError("missing subcommand (gen, run, bench, sweep, negsel, ainet)")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        settings = _settings(args)
        settings["no_figures"] = args.no_figures or bool(settings.get("no_figures", False))
        if args.command == "gen":
            result = cmd_gen(settings)
        elif args.command == "sweep":
            result = cmd_sweep(settings)
        else:
            result = cmd_experiment(settings, args.command)
    except (CliError, bench.BenchError, datasets.DatasetError, ShapeSpaceError, ValueError, OSError) as exc:
        print(f"aislab: error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    print(json.dumps(result, sort_keys=True, default=_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
