"""Experiment orchestration and the ``contextual-pandora`` command line."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cpb import FEEDBACK_MODES, CpbConfig, RegretTrace, cpb_run
from .env import EnvConfig, baseline_run, generate_stream
from .verification import SUITES, run_suites

log = logging.getLogger(__name__)

ALGORITHMS = ("cpb", "linreg-baseline")
RAW_HEADER = ["mode", "algorithm", "repetition", "t", "round_cost", "opt_cost", "cum_regret"]
AGG_HEADER = ["mode", "algorithm", "t", "mean_cum_regret", "stderr"]
AGGREGATE_FILE = "aggregate.csv"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    n_boxes: int = 10
    dim: int = 5
    horizon: int = 300
    cost: float = 1.0
    norm_bound: float = 4.0
    sigma_margin: float = 0.1
    seed: int = 0
    repetitions: int = 20
    feedback: tuple = FEEDBACK_MODES
    algorithms: tuple = ALGORITHMS
    out_dir: Path = field(default=Path("results"), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "feedback", tuple(self.feedback))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.feedback or not self.algorithms:
            raise ConfigError("need at least one feedback mode and one algorithm")
        for key, got, allowed in (("feedback", self.feedback, FEEDBACK_MODES),
                                  ("algorithms", self.algorithms, ALGORITHMS)):
            for item in got:
                if item not in allowed:
                    raise ConfigError(f"{key}: unknown entry {item!r}; accepted values: "
                                      f"{', '.join(allowed)}")
        try:
            self.env_config(self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def env_config(self, seed: int) -> EnvConfig:
        return EnvConfig(self.n_boxes, self.dim, self.horizon, self.cost,
                         self.norm_bound, seed, self.sigma_margin)

    def cpb_config(self, mode: str, seed: int) -> CpbConfig:
        return CpbConfig(self.n_boxes, self.dim, self.horizon,
                         (self.cost,) * self.n_boxes, self.norm_bound, mode, seed)


CONFIG_KEYS = tuple(f.name for f in fields(ExperimentSpec) if f.name != "out_dir")


def load_spec(path, out_dir, seed=None) -> ExperimentSpec:
    """Read a flat JSON config; unknown keys are rejected."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in raw:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}; accepted keys: {', '.join(CONFIG_KEYS)}")
    if seed is not None:
        raw["seed"] = seed
    return ExperimentSpec(out_dir=out_dir, **raw)


def substream_seed(master: int, mode_index: int, repetition: int) -> int:
    """64-bit seed for one (mode, repetition); algorithms share it."""
    ss = np.random.SeedSequence([int(master), mode_index, repetition])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_repetition(spec: ExperimentSpec, mode_index: int, repetition: int) -> dict:
    """All algorithms on one shared instance stream."""
    mode = spec.feedback[mode_index]
    seed = substream_seed(spec.seed, FEEDBACK_MODES.index(mode), repetition)
    stream = generate_stream(spec.env_config(seed))
    config = spec.cpb_config(mode, seed)
    traces = {}
    for algo in spec.algorithms:
        traces[algo] = cpb_run(stream, config) if algo == "cpb" else baseline_run(stream, config)
    return traces


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_raw(path: Path, mode: str, algorithm: str, repetition: int,
              trace: RegretTrace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_HEADER)
        for t, (rc, oc, cr) in enumerate(zip(trace.round_cost, trace.opt_cost,
                                             trace.cum_regret), start=1):
            w.writerow([mode, algorithm, repetition, t, _fmt(rc), _fmt(oc), _fmt(cr)])


def raw_path(out_dir: Path, mode: str, algorithm: str, repetition: int) -> Path:
    return out_dir / f"raw_{mode}_{algorithm}_rep{repetition:03d}.csv"


def aggregate(cum_regrets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error across repetitions (rows) per round."""
    reps = cum_regrets.shape[0]
    mean = cum_regrets.mean(axis=0)
    if reps == 1:
        return mean, np.zeros_like(mean)
    return mean, cum_regrets.std(axis=0, ddof=1) / math.sqrt(reps)


def aggregate_rows(results: dict) -> list:
    """``results[(mode, algorithm)]`` is a list of traces ordered by repetition."""
    rows = []
    for (mode, algo), traces in results.items():
        mean, se = aggregate(np.array([tr.cum_regret for tr in traces]))
        for t in range(len(mean)):
            rows.append((mode, algo, t + 1, float(mean[t]), float(se[t])))
    return rows


def write_aggregate(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_HEADER)
        for mode, algo, t, m, s in rows:
            w.writerow([mode, algo, t, _fmt(m), _fmt(s)])


def read_raw(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        "mode": rows[0]["mode"], "algorithm": rows[0]["algorithm"],
        "repetition": int(rows[0]["repetition"]),
        "trace": RegretTrace(np.array([float(r["round_cost"]) for r in rows]),
                             np.array([float(r["opt_cost"]) for r in rows])),
        "cum_regret": np.array([float(r["cum_regret"]) for r in rows]),
    }


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> dict:
    """Run every (mode, repetition), write raw and aggregate CSVs.

    Returns ``{(mode, algorithm): [trace per repetition]}``.
    """
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(m, r) for m in range(len(spec.feedback)) for r in range(spec.repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            outputs = list(pool.map(run_repetition, [spec] * len(tasks),
                                    *zip(*tasks)))
    else:
        outputs = [run_repetition(spec, m, r) for m, r in tasks]

    results = {(mode, algo): [] for mode in spec.feedback for algo in spec.algorithms}
    for (m, r), traces in zip(tasks, outputs):
        mode = spec.feedback[m]
        for algo, trace in traces.items():
            write_raw(raw_path(spec.out_dir, mode, algo, r), mode, algo, r, trace)
            results[(mode, algo)].append(trace)
        log.info("mode=%s repetition=%d done", mode, r)
    write_aggregate(spec.out_dir / AGGREGATE_FILE, aggregate_rows(results))
    return results


def _cmd_run(args) -> int:
    spec = load_spec(args.config, args.out, args.seed)
    results = run_experiment(spec, jobs=args.jobs)
    for (mode, algo), traces in results.items():
        mean, se = aggregate(np.array([tr.cum_regret[-1:] for tr in traces]))
        print(f"{mode:6s} {algo:16s} regret(T) = {mean[0]:.3f} +/- {se[0]:.3f}")
    print(f"wrote {spec.out_dir}")
    return 0


def _cmd_verify(args) -> int:
    ok = True
    for result in run_suites(args.suite):
        print(result.line())
        ok &= result.passed
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="contextual-pandora")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="run the property suites")
    ver.add_argument("--suite", default="all", choices=["all", *SUITES])
    ver.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
