"""Command line entry point: ``robustda run|check|simulate <config.json>``.

The configuration is a single JSON document, for example::

    {
      "data": {"simulate": {"n": 50, "d": 2, "p": 2, "seed": 1,
                            "mixing": {"family": "gamma", "params": {"a": 1, "b": 1}}}},
      "missing": {"complete_rows": 45},
      "prior": {"m": 2, "a": "zero"},
      "mixing": {"family": "gamma", "params": {"a": 2, "b": 2}},
      "algorithm": "da",
      "iterations": 30000, "burn_in": 0, "seed": 7,
      "outputs": {"draws": "draws.csv", "report": "report.json"}
    }

``data`` may instead be ``{"csv": "path.csv"}``. Relative paths resolve
against the directory holding the configuration file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data_model import ChainOutput, Dataset, Prior
from .diagnostics import ess_report
from .errors import ConfigError, H2ViolationError, IngestionError, RobustDAError
from .mixing import GEOMETRICALLY_ERGODIC, MixingSpec, check_h2, make_mixing, verdict_theorem1
from .samplers import DaConfig, DaiConfig, run_da, run_dai
from .missing_structures import (
    MissingStructure,
    check_h1,
    check_proposition1,
    decompose_arranged,
    is_monotone,
    try_monotonize,
)

log = logging.getLogger("robustda")

NA_TOKEN = "NA"
THREADS_ENV = "ROBUSTDA_THREADS"
EXIT_OK, EXIT_MODULE_ERROR, EXIT_CONFIG_ERROR, EXIT_REFUSED = 0, 1, 2, 3


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    data: dict
    mixing: MixingSpec
    algorithm: str = "da"
    missing: Optional[dict] = None
    prior_m: Optional[float] = None
    prior_a: object = "zero"
    k_prime: object = "all_ones"
    iterations: int = 1000
    burn_in: int = 0
    seed: int = 0
    posthoc_impute: bool = True
    record_weights: bool = False
    outputs: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    KEYS = {
        "data", "mixing", "algorithm", "missing", "prior", "k_prime", "iterations",
        "burn_in", "seed", "posthoc_impute", "record_weights", "outputs",
    }

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path = Path(".")) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(raw) - cls.KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        for key in ("data", "mixing"):
            if key not in raw:
                raise ConfigError(f"missing required key {key!r}")
        data = raw["data"]
        if not isinstance(data, dict) or len(set(data) & {"csv", "simulate"}) != 1:
            raise ConfigError("data must contain exactly one of 'csv' or 'simulate'")
        if "csv" in data and not (base_dir / data["csv"]).is_file():
            raise ConfigError(f"data file not found: {base_dir / data['csv']}")
        algorithm = raw.get("algorithm", "da")
        if algorithm not in ("da", "dai"):
            raise ConfigError(f"algorithm must be 'da' or 'dai', got {algorithm!r}")
        prior = raw.get("prior", {})
        if not isinstance(prior, dict):
            raise ConfigError("prior must be an object with keys 'm' and 'a'")
        outputs = raw.get("outputs", {})
        bad = set(outputs) - {"draws", "imputations", "report", "dataset"}
        if bad:
            raise ConfigError(f"unknown output keys: {sorted(bad)}")
        try:
            cfg = cls(
                data=data,
                mixing=_parse_mixing(raw["mixing"]),
                algorithm=algorithm,
                missing=raw.get("missing"),
                prior_m=prior.get("m"),
                prior_a=prior.get("a", "zero"),
                k_prime=raw.get("k_prime", "all_ones"),
                iterations=int(raw.get("iterations", 1000)),
                burn_in=int(raw.get("burn_in", 0)),
                seed=int(raw.get("seed", 0)),
                posthoc_impute=bool(raw.get("posthoc_impute", True)),
                record_weights=bool(raw.get("record_weights", False)),
                outputs=dict(outputs),
                base_dir=base_dir,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.iterations < 1 or not 0 <= cfg.burn_in < cfg.iterations:
            raise ConfigError("need iterations >= 1 and 0 <= burn_in < iterations")
        if not 0 <= cfg.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if "simulate" in data:
            _validate_simulate(data["simulate"])
        return cfg

    def path(self, key: str) -> Optional[Path]:
        val = self.outputs.get(key)
        return None if val is None else self.base_dir / val


def _parse_mixing(block) -> MixingSpec:
    if not isinstance(block, dict) or "family" not in block:
        raise ConfigError("mixing must be an object with a 'family' key")
    try:
        return make_mixing(block["family"], **block.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mixing: {exc}") from exc


def _validate_simulate(block: dict):
    try:
        n, d = int(block["n"]), int(block["d"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("simulate block needs integer 'n' and 'd'")
    p = int(block.get("p", 2))
    if n < 1 or d < 1 or p < 1:
        raise ConfigError("simulate dimensions must be positive")
    if "coefficients" in block and np.shape(block["coefficients"]) != (p, d):
        raise ConfigError(f"coefficients must be a {p} x {d} matrix")
    if "sigma" in block and np.shape(block["sigma"]) != (d, d):
        raise ConfigError(f"sigma must be a {d} x {d} matrix")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return RunConfig.from_dict(raw, path.resolve().parent)


# --------------------------------------------------------------------------
# Data
# --------------------------------------------------------------------------

def ingest_csv(path) -> tuple[Dataset, MissingStructure]:
    """Read responses ``y1..yd`` then predictors ``x1..xp``; ``NA`` marks a missing response."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise IngestionError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = sum(1 for h in header if h.startswith("y"))
    p = len(header) - d
    expected = [f"y{j + 1}" for j in range(d)] + [f"x{j + 1}" for j in range(p)]
    if d == 0 or p == 0 or header != expected:
        raise IngestionError(f"{path}: header must be y1..yd followed by x1..xp, got {header}")
    y, mask, x = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + p:
            raise IngestionError(f"{path}:{lineno}: expected {d + p} fields, found {len(row)}")
        yrow, mrow = [], []
        for j, tok in enumerate(row[:d]):
            tok = tok.strip()
            if tok == NA_TOKEN:
                yrow.append(0.0)
                mrow.append(False)
            else:
                yrow.append(_parse_number(tok, path, lineno, header[j]))
                mrow.append(True)
        xrow = []
        for j, tok in enumerate(row[d:]):
            tok = tok.strip()
            if tok == NA_TOKEN:
                raise IngestionError(f"{path}:{lineno}: predictor {header[d + j]} is missing")
            xrow.append(_parse_number(tok, path, lineno, header[d + j]))
        y.append(yrow)
        mask.append(mrow)
        x.append(xrow)
    if not y:
        raise IngestionError(f"{path}: no data rows")
    try:
        data = Dataset(np.array(y), np.array(mask), np.array(x))
    except RobustDAError as exc:
        raise IngestionError(f"{path}: {exc}") from exc
    return data, MissingStructure(data.mask)


def _parse_number(tok: str, path, lineno: int, column: str) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise IngestionError(f"{path}:{lineno}: column {column}: cannot parse {tok!r} as a number")
    if not math.isfinite(val):
        raise IngestionError(f"{path}:{lineno}: column {column}: non-finite value {tok!r}")
    return val


def write_dataset_csv(target, data: Dataset):
    """Write ``data`` in the ingestion format; ``target`` is a path or an open text file."""
    if hasattr(target, "write"):
        _write_dataset(target, data)
    else:
        with open(target, "w", newline="") as fh:
            _write_dataset(fh, data)


def _write_dataset(fh, data: Dataset):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([f"y{j + 1}" for j in range(data.d)] + [f"x{j + 1}" for j in range(data.p)])
    for yrow, mrow, xrow in zip(data.y, data.mask, data.x):
        writer.writerow(
            [format(v, ".17g") if m else NA_TOKEN for v, m in zip(yrow, mrow)]
            + [format(v, ".17g") for v in xrow]
        )


def simulate_dataset(block: dict, rng: np.random.Generator) -> Dataset:
    """Complete synthetic data: ``x_i = (1, xi_i)``, ``y_i = B' x_i + w_i^{-1/2} Sigma^{1/2} eps_i``.

    Defaults, all overridable: ``B`` all ones, ``Sigma = I``, p = 2,
    standard normal predictors and Gamma(1, 1) mixing.
    """
    n, d = int(block["n"]), int(block["d"])
    p = int(block.get("p", 2))
    beta = np.asarray(block.get("coefficients", np.ones((p, d))), dtype=float)
    sigma = np.asarray(block.get("sigma", np.eye(d)), dtype=float)
    mixing = _parse_mixing(block.get("mixing", {"family": "gamma", "params": {"a": 1.0, "b": 1.0}}))
    x = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
    w = np.asarray(mixing.sample(rng, size=n), dtype=float)
    low = np.linalg.cholesky(sigma)
    eps = rng.standard_normal((n, d)) @ low.T / np.sqrt(w)[:, None]
    return Dataset(x @ beta + eps, None, x)


def _apply_missing(data: Dataset, spec) -> Dataset:
    if spec is None or spec == "from_data":
        return data
    if isinstance(spec, dict) and "complete_rows" in spec:
        c = int(spec["complete_rows"])
        if not 0 < c <= data.n:
            raise ConfigError(f"complete_rows must lie in 1..{data.n}")
        mask = np.ones((data.n, data.d), dtype=bool)
        mask[c:, :-1] = False  # remaining rows observe only the last response
        return data.with_mask(mask)
    if isinstance(spec, dict) and "mask" in spec:
        mask = np.asarray(spec["mask"], dtype=bool)
        if mask.shape != data.mask.shape:
            raise ConfigError("missing.mask shape does not match the data")
        return data.with_mask(mask & data.mask)
    raise ConfigError("missing must be 'from_data', {'complete_rows': c} or {'mask': [[...]]}")


def build_dataset(cfg: RunConfig) -> Dataset:
    if "csv" in cfg.data:
        data, _ = ingest_csv(cfg.base_dir / cfg.data["csv"])
    else:
        block = cfg.data["simulate"]
        data = simulate_dataset(block, np.random.default_rng(int(block.get("seed", 0))))
    return _apply_missing(data, cfg.missing)


def build_prior(cfg: RunConfig, d: int) -> Prior:
    m = d if cfg.prior_m is None else cfg.prior_m
    a = np.zeros((d, d)) if isinstance(cfg.prior_a, str) and cfg.prior_a == "zero" else cfg.prior_a
    try:
        prior = Prior(m, a)
    except ValueError as exc:
        raise ConfigError(f"prior: {exc}") from exc
    if prior.d != d:
        raise ConfigError(f"prior matrix a must be {d} x {d}")
    return prior


def build_k_prime(cfg: RunConfig, data: Dataset) -> Optional[MissingStructure]:
    if isinstance(cfg.k_prime, str):
        if cfg.k_prime != "all_ones":
            raise ConfigError("k_prime must be 'all_ones' or a 0/1 matrix")
        return None
    mask = np.asarray(cfg.k_prime, dtype=bool)
    if mask.shape != data.mask.shape:
        raise ConfigError("k_prime shape does not match the data")
    return MissingStructure(mask)


# --------------------------------------------------------------------------
# Checks
# --------------------------------------------------------------------------

def check_report(cfg: RunConfig, data: Dataset, prior: Prior) -> dict:
    """Structure and mixing checks, as a JSON-ready dictionary."""
    mask = data.mask
    dec = try_monotonize(mask)
    structure = {
        "n": data.n, "d": data.d, "p": data.p,
        "missing_entries": int((~mask).sum()),
        "is_monotone": is_monotone(mask),
        "monotone_after_permutation": dec is not None,
    }
    if dec is not None:
        if not dec.is_identity:
            structure["row_permutation"] = (dec.row_permutation + 1).tolist()
            structure["column_permutation"] = (dec.column_permutation + 1).tolist()
        structure["n_per_pattern"] = dec.n_per_pattern.tolist()
        h1 = check_h1(decompose_arranged(dec, data), data, prior)
        structure["h1"] = {"passed": h1.passed, "patterns": [_pattern_dict(c) for c in h1.patterns]}
    witness = check_proposition1(mask, data, prior)
    structure["proposition1_witness"] = {
        "found": witness.found,
        "kept_rows": None if witness.kept_rows is None else int(witness.kept_rows.size),
        "patterns": [] if witness.report is None else [_pattern_dict(c) for c in witness.report.patterns],
    }
    min_di = int(data.observed_counts.min())
    verdict = verdict_theorem1(cfg.mixing, data.n, data.p, data.d, prior.m, min_di)
    mixing = {
        "family": cfg.mixing.family,
        "params": _jsonable(cfg.mixing.params()),
        "h2": check_h2(cfg.mixing, data.d),
        "min_observed_per_row": min_di,
        "verdict": verdict.to_dict(),
    }
    return {"algorithm": cfg.algorithm, "structure": structure, "mixing": mixing,
            "prior": {"m": prior.m, "a": prior.a.tolist()}}


def _pattern_dict(c) -> dict:
    return {"pattern": c.pattern, "rows": c.rows, "rank": c.rank, "rank_required": c.rank_required,
            "count_required": c.count_required, "df": c.df, "ok": c.ok}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _warn_on(report: dict):
    mix, st = report["mixing"], report["structure"]
    if not mix["h2"]:
        raise H2ViolationError(
            f"refusing to run: Condition H2 fails for {mix['family']} with d={st['d']} "
            "(the d/2-th moment of the mixing distribution is infinite)"
        )
    if mix["verdict"]["theorem1"] != GEOMETRICALLY_ERGODIC:
        log.warning("geometric ergodicity not established: %s", mix["verdict"]["reason"])
    if report["algorithm"] == "dai" and not st["proposition1_witness"]["found"]:
        log.warning("no Proposition-1 witness found; Harris ergodicity of DAI is not certified")


# --------------------------------------------------------------------------
# Output files
# --------------------------------------------------------------------------

def draws_header(p: int, d: int) -> list[str]:
    rows, cols = np.tril_indices(d)
    return (["iteration"] + [f"B{i + 1}{j + 1}" for i in range(p) for j in range(d)]
            + [f"Sigma{i + 1}{j + 1}" for i, j in zip(rows, cols)])


def write_draws_csv(path, output: ChainOutput, first_iteration: int = 1):
    """One line per draw: iteration, B row-major, Sigma lower triangle row-major (17 digits)."""
    t, p, d = output.beta.shape
    rows, cols = np.tril_indices(d)
    flat = np.hstack([output.beta.reshape(t, p * d), output.sigma[:, rows, cols]])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(draws_header(p, d)) + "\n")
        for s, vals in enumerate(flat):
            fh.write(str(first_iteration + s) + "," + ",".join(format(v, ".17g") for v in vals) + "\n")


def read_draws_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_draws_csv`: ``(iterations, beta, sigma)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = np.array([[float(v) for v in row] for row in reader])
    nb = sum(1 for h in header if h.startswith("B"))
    ns = len(header) - 1 - nb
    d = int(round((math.sqrt(8 * ns + 1) - 1) / 2))
    p = nb // d
    t = body.shape[0]
    beta = body[:, 1:1 + nb].reshape(t, p, d)
    sigma = np.zeros((t, d, d))
    rows, cols = np.tril_indices(d)
    sigma[:, rows, cols] = body[:, 1 + nb:]
    sigma[:, cols, rows] = body[:, 1 + nb:]
    return body[:, 0].astype(int), beta, sigma


def write_imputations_csv(path, output: ChainOutput, first_iteration: int = 1):
    """Long format: iteration, row, column, value (1-based indices)."""
    with open(path, "w", newline="") as fh:
        fh.write("iteration,row,column,value\n")
        if output.imputations is None:
            return
        rows = output.imputed_rows + 1
        cols = output.imputed_cols + 1
        for s, vals in enumerate(output.imputations):
            it = first_iteration + s
            fh.writelines(f"{it},{r},{c},{format(v, '.17g')}\n" for r, c, v in zip(rows, cols, vals))


def _replica_path(path: Path, rep: int, total: int) -> Path:
    return path if total == 1 else path.with_name(f"{path.stem}.rep{rep + 1}{path.suffix}")


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def _run_chain(cfg: RunConfig, data: Dataset, prior: Prior, seed: int) -> ChainOutput:
    if cfg.algorithm == "da":
        conf = DaConfig(cfg.iterations, cfg.burn_in, seed, cfg.record_weights, cfg.posthoc_impute)
        return run_da(data, None, prior, cfg.mixing, conf)
    conf = DaiConfig(cfg.iterations, cfg.burn_in, seed, cfg.record_weights, cfg.posthoc_impute,
                     k_prime=build_k_prime(cfg, data))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # reported through the check section
        return run_dai(data, None, prior, cfg.mixing, conf)


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")


def command_run(cfg: RunConfig, replications: int = 1) -> dict:
    data = build_dataset(cfg)
    prior = build_prior(cfg, data.d)
    report = check_report(cfg, data, prior)
    _warn_on(report)
    seeds = [(cfg.seed + r) % 2**64 for r in range(replications)]
    with ThreadPoolExecutor(max_workers=min(_thread_count(), replications)) as pool:
        outputs = list(pool.map(lambda s: _run_chain(cfg, data, prior, s), seeds))

    first = cfg.burn_in + 1
    runs = []
    for rep, out in enumerate(outputs):
        ess = ess_report(out)
        entry = {"seed": out.meta.seed, "diagnostics": _jsonable(ess.to_dict()),
                 "timings": {"sampling_seconds": out.meta.duration,
                             "posthoc_seconds": out.meta.posthoc_duration}}
        if "h1" in out.extras:
            entry["h1_passed"] = out.extras["h1"].passed
        runs.append(entry)
        if (path := cfg.path("draws")) is not None:
            write_draws_csv(_replica_path(path, rep, replications), out, first)
        if (path := cfg.path("imputations")) is not None:
            write_imputations_csv(_replica_path(path, rep, replications), out, first)
    if (path := cfg.path("dataset")) is not None:
        write_dataset_csv(path, data)
    report["runs"] = runs
    if replications > 1:
        report["median_joint_ess"] = float(np.median([r["diagnostics"]["joint_ess"] for r in runs]))
    report = _jsonable(report)
    if (path := cfg.path("report")) is not None:
        Path(path).write_text(json.dumps(report, indent=2) + "\n")
    return report


def command_check(cfg: RunConfig) -> dict:
    data = build_dataset(cfg)
    prior = build_prior(cfg, data.d)
    report = _jsonable(check_report(cfg, data, prior))
    if (path := cfg.path("report")) is not None:
        Path(path).write_text(json.dumps(report, indent=2) + "\n")
    return report


def command_simulate(cfg: RunConfig, out: Optional[Path] = None) -> Dataset:
    data = build_dataset(cfg)
    write_dataset_csv(out or cfg.path("dataset") or sys.stdout, data)
    return data


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustda", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="check conditions, run the chain(s), write outputs")
    run.add_argument("config")
    run.add_argument("--replications", type=int, default=1,
                     help=f"independent chains with seeds seed, seed+1, ... (threads: ${THREADS_ENV})")
    chk = sub.add_parser("check", help="structure and condition report only")
    chk.add_argument("config")
    sim = sub.add_parser("simulate", help="write the configured dataset as CSV")
    sim.add_argument("config")
    sim.add_argument("-o", "--output", help="destination (default: outputs.dataset or stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            if args.replications < 1:
                raise ConfigError("--replications must be at least 1")
            report = command_run(cfg, args.replications)
            for run in report["runs"]:
                diag = run["diagnostics"]
                print(f"seed {run['seed']}: joint ESS {diag['joint_ess']:.1f}, "
                      f"ESSpm {diag['joint_esspm']:.1f}, {run['timings']['sampling_seconds']:.2f}s")
        elif args.command == "check":
            report = command_check(cfg)
            print(json.dumps(report, indent=2))
            return EXIT_OK if report["mixing"]["h2"] else EXIT_REFUSED
        else:
            command_simulate(cfg, Path(args.output) if args.output else None)
    except H2ViolationError as exc:
        log.error("%s", exc)
        return EXIT_REFUSED
    except (ConfigError, IngestionError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG_ERROR
    except RobustDAError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_MODULE_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
