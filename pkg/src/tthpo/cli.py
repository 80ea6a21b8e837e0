"""Command-line entry point.

Subcommands::

    tthpo run --config experiment.yaml   # run a trial suite, write its CSV
    tthpo compare a.csv b.csv            # per-dimension fitness/ER table
    tthpo selftest                       # oracle checks of every layer
    tthpo bench-kernels                  # time compiled vs python kernels

Experiment configs are YAML; see configs/ for working examples.  Errors
exit with status 2 and a single machine-parsable line on stderr::

    error: ConfigInvalid: trials: must be >= 1, got 0
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

import yaml

from .gridsearch import GsConfig
from .harness import (
    ConfigInvalid,
    ExperimentConfig,
    ModelOptions,
    MismatchedExperiments,
    bench_kernels,
    compare,
    format_comparison,
    load_report_csv,
    run_suite,
    selftest,
)
from .objectives import BENCHMARK_KINDS, make_benchmark
from .space import AxisSpec, SearchSpace
from .ttopt import TtConfig

_TOP_KEYS = {
    "method",
    "objective",
    "space",
    "method_params",
    "trials",
    "base_seed",
    "output",
    "record_wall_time",
    "model",
}


def _reject_unknown(section: str, mapping: dict, allowed) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigInvalid(
            f"{section}: unknown key(s) {', '.join(unknown)}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def _expect_mapping(section: str, value) -> dict:
    if not isinstance(value, dict):
        raise ConfigInvalid(f"{section}: expected a mapping, got {type(value).__name__}")
    return value


def _build_space(raw, objective: str) -> SearchSpace:
    raw = _expect_mapping("space", raw)
    if "dimension" in raw or "points" in raw:
        _reject_unknown("space", raw, ("dimension", "points"))
        if objective not in BENCHMARK_KINDS:
            raise ConfigInvalid(
                "space: the dimension/points shorthand only applies to the "
                "benchmark objectives; model objectives need explicit axes"
            )
        for key in ("dimension", "points"):
            if key not in raw:
                raise ConfigInvalid(f"space.{key}: required with the shorthand form")
            if not isinstance(raw[key], int):
                raise ConfigInvalid(f"space.{key}: expected an integer")
        probe = make_benchmark(objective, raw["dimension"], seed=0)
        return probe.space(raw["points"])
    _reject_unknown("space", raw, ("axes",))
    axes_raw = raw.get("axes")
    if not isinstance(axes_raw, list) or not axes_raw:
        raise ConfigInvalid("space.axes: expected a non-empty list of axis mappings")
    axes = []
    for i, axis_raw in enumerate(axes_raw):
        axis_raw = _expect_mapping(f"space.axes[{i}]", axis_raw)
        _reject_unknown(
            f"space.axes[{i}]", axis_raw, ("name", "lower", "upper", "points", "kind")
        )
        try:
            axes.append(AxisSpec(**axis_raw))
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"space.axes[{i}]: {exc}") from exc
    try:
        return SearchSpace(axes)
    except ValueError as exc:
        raise ConfigInvalid(f"space: {exc}") from exc


def _build_method_params(method: str, raw) -> TtConfig | GsConfig:
    cls = TtConfig if method == "tt" else GsConfig
    allowed = {f.name for f in fields(cls)} - {"seed"}  # seed comes from the trial
    raw = _expect_mapping("method_params", raw if raw is not None else {})
    _reject_unknown("method_params", raw, allowed)
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"method_params: {exc}") from exc


def _build_model_options(raw) -> ModelOptions:
    allowed = {f.name for f in fields(ModelOptions)}
    raw = _expect_mapping("model", raw if raw is not None else {})
    _reject_unknown("model", raw, allowed)
    try:
        return ModelOptions(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"model: {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    """Parse a YAML experiment file into a validated ExperimentConfig."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{path}: not valid YAML ({exc})") from exc
    raw = _expect_mapping(path, raw)
    _reject_unknown(path, raw, _TOP_KEYS)
    for key in ("method", "objective", "space"):
        if key not in raw:
            raise ConfigInvalid(f"{key}: required")
    method = raw["method"]
    objective = raw["objective"]
    if not isinstance(method, str) or not isinstance(objective, str):
        raise ConfigInvalid("method/objective: expected strings")
    kwargs = {}
    if "trials" in raw:
        if not isinstance(raw["trials"], int):
            raise ConfigInvalid("trials: expected an integer")
        kwargs["trials"] = raw["trials"]
    if "base_seed" in raw:
        if not isinstance(raw["base_seed"], int):
            raise ConfigInvalid("base_seed: expected an integer")
        kwargs["base_seed"] = raw["base_seed"]
    if "output" in raw:
        if not isinstance(raw["output"], str):
            raise ConfigInvalid("output: expected a path string")
        kwargs["output_path"] = raw["output"]
    if "record_wall_time" in raw:
        if not isinstance(raw["record_wall_time"], bool):
            raise ConfigInvalid("record_wall_time: expected a boolean")
        kwargs["record_wall_time"] = raw["record_wall_time"]
    if "model" in raw:
        kwargs["model_options"] = _build_model_options(raw["model"])
    return ExperimentConfig(
        method=method,
        objective=objective,
        space=_build_space(raw["space"], objective),
        method_params=_build_method_params(method, raw.get("method_params")),
        **kwargs,
    )


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    report = run_suite(cfg)
    print(
        f"{cfg.method}/{cfg.objective}: {cfg.trials} trial(s), "
        f"mean best {report.mean_best:.6g}, min {report.min_best:.6g}, "
        f"max distinct evals {report.expected_runtime}"
    )
    if cfg.output_path:
        print(f"report: {cfg.output_path}")
    return 0


def _cmd_compare(args) -> int:
    rows = compare(load_report_csv(args.report_a), load_report_csv(args.report_b))
    print(f"a = {args.report_a}")
    print(f"b = {args.report_b}")
    print(format_comparison(rows))
    return 0


def _cmd_selftest(_args) -> int:
    results = selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    failed = sum(1 for _, ok, _ in results if not ok)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def _cmd_bench_kernels(args) -> int:
    out = bench_kernels(
        qubits=args.qubits, batch=args.batch, depth=args.depth, repeats=args.repeats
    )
    print(
        f"workload: {out['qubits']} qubits, batch {out['batch']}, "
        f"depth {out['depth']}"
    )
    for name, seconds in sorted(out["timings"].items()):
        print(f"  {name:>8}: {seconds * 1000:.3f} ms")
    if len(out["timings"]) == 2:
        ratio = out["timings"]["python"] / out["timings"]["compiled"]
        print(f"speedup: {ratio:.2f}x, outputs agree: {out['agree']}")
    else:
        only = next(iter(out["timings"]))
        print(f"only the {only} backend is available")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tthpo",
        description="Tensor-train hyperparameter optimization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a YAML-configured trial suite")
    p_run.add_argument("--config", required=True, help="experiment YAML path")
    p_run.set_defaults(fn=_cmd_run)

    p_cmp = sub.add_parser("compare", help="compare two report CSVs")
    p_cmp.add_argument("report_a")
    p_cmp.add_argument("report_b")
    p_cmp.set_defaults(fn=_cmd_compare)

    p_self = sub.add_parser("selftest", help="run built-in oracle checks")
    p_self.set_defaults(fn=_cmd_selftest)

    p_bench = sub.add_parser(
        "bench-kernels", help="time compiled vs pure-python statevector kernels"
    )
    p_bench.add_argument("--qubits", type=int, default=10)
    p_bench.add_argument("--batch", type=int, default=64)
    p_bench.add_argument("--depth", type=int, default=4)
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.set_defaults(fn=_cmd_bench_kernels)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigInvalid, MismatchedExperiments, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
