"""Command-line front end.

Modes
  sample      one perfect draw, printed as JSON
  omni        a batch of omnithermal draws, one JSON record per line
  experiment  a batch reduced to extensions.csv, means.csv and cdf.csv
  validate    the self-check suites; exit 1 on the first failure

Exit codes: 0 ok, 1 validation failure, 2 invalid configuration,
3 aborted run (partial output is removed).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import shutil
import sys
from dataclasses import dataclass, field, fields
from multiprocessing import get_context
from pathlib import Path

from . import queue_core as qc
from .analytics import summarize
from .rng import DEFAULT_SEED
from .sampler import (
    QueueSpec,
    SampleRecord,
    SamplerAborted,
    algorithm2_sample,
    omnithermal_draw,
    omnithermal_sample,
    verify_upper_coalesced,
)

log = logging.getLogger("omniqueue")

SAMPLE_SCHEMA = "omniqueue.sample/1"
MODES = ("sample", "omni", "experiment", "validate")

PRESETS = {
    "means": {"c": 2, "lam": 1.2, "mu": 1.0, "m_list": [0, 1, 2], "runs": 5000},
    # one sub-experiment per server count, lambda = c and mu = 2
    "backoff": {"mu": 2.0, "runs": 5000, "sweep": [10, 30, 50]},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "sample"
    c: int = 2
    lam: float = 1.2
    mu: float = 1.0
    m_list: list = field(default_factory=lambda: [0])
    beta_list: list = field(default_factory=list)
    runs: int = 100
    seed: int = DEFAULT_SEED
    t0: float = -1.0
    max_doublings: int = 40
    run_id: int = 0
    preset: str | None = None
    sweep: list = field(default_factory=list)
    out_dir: str | None = None
    threads: int = 1
    svg: bool = False
    verify_upper: bool = False
    scale: float = 1.0
    verbose: int = 0

    def check(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.mode == "experiment" and not self.out_dir:
            raise ConfigError("experiment mode needs --out-dir")
        for c in self.sweep or [self.c]:
            self.spec(c)

    def spec(self, c: int | None = None) -> QueueSpec:
        c = self.c if c is None else c
        lam = float(c) if self.sweep else self.lam
        return QueueSpec(c, lam, self.mu, tuple(self.m_list), tuple(self.beta_list),
                         self.t0, self.max_doublings, self.seed)


# --- argument handling -------------------------------------------------------

def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="omniqueue", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--c", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--m-list", type=_int_list, help="comma separated, e.g. 0,1,2")
    p.add_argument("--beta-list", type=_float_list, help="comma separated values in (0, 1]")
    p.add_argument("--runs", type=int)
    p.add_argument("--run-id", type=int, help="run id for --mode sample")
    p.add_argument("--seed", type=int)
    p.add_argument("--t0", type=float, help="initial backoff time (negative)")
    p.add_argument("--max-doublings", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--threads", type=int)
    p.add_argument("--svg", action="store_true", default=None, help="also write SVG figures")
    p.add_argument("--verify-upper", action="store_true", default=None,
                   help="check every c+m upper process explicitly (slow)")
    p.add_argument("--scale", type=float, help="size multiplier for validation suites")
    p.add_argument("-v", "--verbose", action="count")
    p.add_argument("--corrupt-tie-break", action="store_true", help=argparse.SUPPRESS)
    return p


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    merged: dict = {}
    file_cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if "lambda" in file_cfg:
            file_cfg["lam"] = file_cfg.pop("lambda")
        unknown = set(file_cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    preset = args.preset or file_cfg.get("preset")
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        merged.update(PRESETS[preset], preset=preset, mode="experiment")
    merged.update(file_cfg)
    flags = {k: v for k, v in vars(args).items() if k in known and v is not None}
    merged.update(flags)
    try:
        cfg = ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.check()
    return cfg


# --- running -----------------------------------------------------------------

def _one_run(job) -> SampleRecord:
    spec, run_id, verify = job
    if not verify:
        return omnithermal_sample(spec, run_id)
    rec = omnithermal_sample(spec, run_id)
    tr, path, *_ = omnithermal_draw(spec, run_id)
    for m in spec.m_list:
        if m and not verify_upper_coalesced(tr, path, m):
            raise AssertionError(f"run {run_id}: upper process for c+{m} servers not coalesced")
    return rec


def run_batch(spec: QueueSpec, runs: int, threads: int = 1, verify: bool = False):
    """Records for run ids 0..runs-1, always in run id order."""
    jobs = [(spec, r, verify) for r in range(runs)]
    if threads == 1:
        return [_one_run(j) for j in jobs]
    with get_context("spawn").Pool(threads) as pool:
        return pool.map(_one_run, jobs, chunksize=max(1, runs // (8 * threads)))


def _selector_name(key, kind: str) -> str:
    return f"m={key}" if kind == "m" else f"beta={key!r}"


def record_to_dict(rec: SampleRecord, spec: QueueSpec) -> dict:
    return {
        "schema": SAMPLE_SCHEMA,
        "run_id": rec.run_id,
        "c": spec.c,
        "lambda": spec.lam,
        "mu": spec.mu,
        "samples": {_selector_name(m, "m"): list(v) for m, v in rec.samples.items()},
        "betas": {_selector_name(b, "beta"): list(v) for b, v in rec.betas.items()},
        "T": rec.T,
        "Tc": rec.Tc,
        "doublings": {"coalesce": rec.doublings_coalesce,
                      "condition": rec.doublings_condition},
        "seed": spec.seed,
    }


def single_sample(spec: QueueSpec, run_id: int) -> SampleRecord:
    """Plain backoff sampler when only m = 0 is asked for, omnithermal otherwise."""
    if spec.m_list == (0,) and not spec.beta_list:
        tr, path, d = algorithm2_sample(spec, run_id)
        return SampleRecord(run_id, {0: tr.final_lower}, {}, path.window_start,
                            tr.coalesced_at, spec.t0, d, 0)
    return omnithermal_sample(spec, run_id)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_tables(records, spec: QueueSpec, out: Path, svg: bool = False) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "extensions.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["run_id", "T_final", "Tc", "doublings_coalesce", "doublings_condition"])
        for r in records:
            w.writerow([r.run_id, repr(r.T), repr(r.Tc), r.doublings_coalesce,
                        r.doublings_condition])
    selectors = [("m", m) for m in spec.m_list] + [("beta", b) for b in spec.beta_list]
    summaries = []
    for kind, key in selectors:
        s = summarize(records, m=key) if kind == "m" else summarize(records, beta=key)
        label = str(key) if kind == "m" else _selector_name(key, kind)
        summaries.append((label, s))
    with open(out / "means.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["m", "coordinate", "mean", "stderr"])
        for label, s in summaries:
            for k, (mean, se) in enumerate(zip(s.means, s.stderrs), start=1):
                w.writerow([label, k, repr(float(mean)), repr(float(se))])
    with open(out / "cdf.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["m", "coordinate", "x", "F(x)"])
        for label, s in summaries:
            for k, (xs, fs) in enumerate(s.cdfs, start=1):
                for x, f in zip(xs, fs):
                    w.writerow([label, k, repr(float(x)), repr(float(f))])
    if svg:
        from .figures import write_figures
        write_figures(records, summaries, out)


def _abort(out: Path | None, created: bool, msg: str) -> int:
    if out is not None and created and out.exists():
        shutil.rmtree(out)
    print(f"aborted: {msg}", file=sys.stderr)
    return 3


def cmd_sample(cfg: ExperimentConfig) -> int:
    spec = cfg.spec()
    try:
        rec = single_sample(spec, cfg.run_id)
    except SamplerAborted as exc:
        return _abort(None, False, str(exc))
    print(json.dumps(record_to_dict(rec, spec)))
    return 0


def cmd_omni(cfg: ExperimentConfig) -> int:
    spec = cfg.spec()
    out = Path(cfg.out_dir) if cfg.out_dir else None
    try:
        records = run_batch(spec, cfg.runs, cfg.threads, cfg.verify_upper)
    except SamplerAborted as exc:
        return _abort(None, False, str(exc))
    lines = "".join(json.dumps(record_to_dict(r, spec)) + "\n" for r in records)
    if out is None:
        sys.stdout.write(lines)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / "records.jsonl").write_text(lines)
    return 0


def cmd_experiment(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    created = not out.exists()
    targets = [(cfg.spec(c), out / f"c{c}") for c in cfg.sweep] or [(cfg.spec(), out)]
    try:
        for spec, where in targets:
            log.info("c=%d lambda=%g mu=%g: %d runs", spec.c, spec.lam, spec.mu, cfg.runs)
            records = run_batch(spec, cfg.runs, cfg.threads, cfg.verify_upper)
            write_tables(records, spec, where, cfg.svg)
            extended = sum(r.condition_was_extended for r in records)
            log.info("c=%d: %d of %d runs extended for the condition",
                     spec.c, extended, len(records))
    except SamplerAborted as exc:
        return _abort(out, created, str(exc))
    return 0


def cmd_validate(cfg: ExperimentConfig) -> int:
    from .validation import all_suites

    for res in all_suites(cfg.scale, cfg.seed):
        print(res.line(), flush=True)
        if not res.passed:
            print("counterexample:", json.dumps(res.counterexample, default=repr, indent=2))
            return 1
    return 0


COMMANDS = {"sample": cmd_sample, "omni": cmd_omni, "experiment": cmd_experiment,
            "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.WARNING - 10 * min(cfg.verbose, 2))
    qc._CORRUPT_TIE_BREAK = bool(args.corrupt_tie_break)
    try:
        return COMMANDS[cfg.mode](cfg)
    finally:
        qc._CORRUPT_TIE_BREAK = False


if __name__ == "__main__":
    sys.exit(main())
