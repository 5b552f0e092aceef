"""
lcurve command line.

    python -m lcurve truth    --config study.cfg --out results/
    python -m lcurve simulate --config study.cfg --out results/ --threads 4
    python -m lcurve estimate --data data.csv --label y --sizes 100,150,200 --out results/
    python -m lcurve rerun    --manifest results/manifest.json --out again/

Exit codes: 0 success, 2 configuration or data error, 3 numeric failure.
"""
import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from .config import RunManifest, load_config
from .covariates import ModelKind, fit_covariate_model
from .curves import delta_estimate
from .errors import DataError, LearningCurveError
from .harness import DEFAULT_SEED, Estimator, StudyConfig, dataset_study, run_mc_study, true_curve_oracle
from .impint import DEFAULT_B, DEFAULT_N, brie_curve
from .logger import logger, set_verbosity
from .subex import DEFAULT_SUBEX_B, subex_curve
from .utils_io import read_dataset, read_features, write_curve, write_frame
from .utils_numerics import RngStream
from .utils_parsing import SelectError, convert_str_to_columns, convert_str_to_ints

MANIFEST_NAME = "manifest.json"
# not replayed from a manifest
RUNTIME_ARGUMENTS = ("command", "out", "threads", "verbose", "quiet", "func", "manifest")


def _parse_list(text: Optional[str], flag: str, minimum: int=None) -> list[int]:
    try:
        return convert_str_to_ints(text, minimum=minimum)
    except SelectError as e:
        raise DataError(f"{flag}: {e}")


def _study_config(args, config: Optional[StudyConfig]) -> StudyConfig:
    cfg = config or load_config(args.config)
    if config is None and args.seed is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    return cfg


def _write_manifest(args, out: Path, started: float, started_at: str, seed: int,
                    config: Optional[StudyConfig]=None, scenario_seconds: Optional[list[float]]=None):
    arguments = {k: v for k, v in vars(args).items() if k not in RUNTIME_ARGUMENTS}
    manifest = RunManifest(command=args.command, arguments=arguments, config=config, master_seed=seed,
                           started_at=started_at, wall_clock_seconds=time.perf_counter() - started,
                           scenario_seconds=scenario_seconds or [])
    manifest.write(out / MANIFEST_NAME)


# ─── Commands ─────────────────────────────────────────────────

def cmd_truth(args, config: Optional[StudyConfig]=None):
    """One Monte-Carlo true curve per scenario: truth_p{p}_r{r}.csv with columns m, tau, std_error."""
    started, started_at = time.perf_counter(), datetime.now(timezone.utc).isoformat()
    cfg = _study_config(args, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = [f"truth_p{s.p}_r{s.r:g}" for s in cfg.scenarios]
    timings = []
    for s, (scenario, name) in enumerate(zip(cfg.scenarios, names)):
        scenario_started = time.perf_counter()
        if names.count(name) > 1:
            name = f"{name}_s{s}"
        logger.info(f"True curve for p={scenario.p}, r={scenario.r:g} at sizes {cfg.sizes}")
        oracle = true_curve_oracle(scenario.generative_model(cfg.kappa), cfg.sizes, cfg.oracle_reps, cfg.oracle_N,
                                   RngStream(cfg.seed, 0, (s, 1)), threads=args.threads)
        write_curve(oracle, out / f"{name}.csv", columns=["m", "tau", "std_error"])
        timings.append(time.perf_counter() - scenario_started)
    _write_manifest(args, out, started, started_at, cfg.seed, config=cfg, scenario_seconds=timings)
    logger.info(f"Wrote {len(names)} curve file(s) to {out}")


def cmd_simulate(args, config: Optional[StudyConfig]=None):
    """Replicated estimator study; study.csv has p, r, estimator, quantity, m_from, m_to, truth, mean, sd."""
    started, started_at = time.perf_counter(), datetime.now(timezone.utc).isoformat()
    cfg = _study_config(args, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    logger.info(f"Simulating {len(cfg.scenarios)} scenario(s), {cfg.replicates} replicate(s) each, "
                f"estimators {cfg.estimators}")
    result = run_mc_study(cfg, threads=args.threads)
    frame = result.to_frame()
    write_frame(frame, out / "study.csv")
    for row in frame.itertuples(index=False):
        logger.debug(f"p={row.p} r={row.r:g} {row.estimator} {row.quantity} m_to={row.m_to}: "
                     f"mean={row.mean:.4f} truth={row.truth:.4f}")
    _write_manifest(args, out, started, started_at, cfg.seed, config=cfg, scenario_seconds=result.scenario_seconds)
    logger.info(f"Wrote {len(frame)} study row(s) to {out / 'study.csv'}")


def cmd_estimate(args, config: Optional[StudyConfig]=None):
    """Learning curves and increments for a user dataset."""
    started, started_at = time.perf_counter(), datetime.now(timezone.utc).isoformat()
    out = Path(args.out)
    D = read_dataset(args.data, args.label)
    if D.p >= D.n and not args.allow_ill_posed:
        raise DataError(f"Dataset has p={D.p} >= n={D.n}; pass --allow-ill-posed to continue anyway.")
    sizes = _parse_list(args.sizes, "--sizes", minimum=1) if args.sizes else [D.n]
    if sizes[0] < D.p + 2:
        raise DataError(f"--sizes must be >= p + 2 = {D.p + 2}, got {sizes[0]}.")
    estimators = [e.strip().lower() for e in args.estimators.split(",") if e.strip()]
    unknown = [e for e in estimators if e not in Estimator.LIST]
    if unknown or not estimators:
        raise DataError(f"--estimators must be a subset of {Estimator.LIST}, got {args.estimators!r}.")
    imputes = Estimator.BRIE in estimators or Estimator.IMPINT in estimators
    if imputes and D.n - 1 < D.p + 2:
        raise DataError(f"BRIE and IMPINT need n - 1 >= p + 2 = {D.p + 2}, but the dataset has n={D.n}.")
    if imputes and args.model == ModelKind.MVN_AR1 and D.p < 2:
        raise DataError(f"--model {args.model} needs at least 2 feature columns; use mvn-full or gc for p = 1.")
    try:
        binary_columns = convert_str_to_columns(args.binary_cols, D.column_names)
    except SelectError as e:
        raise DataError(f"--binary-cols: {e}")
    out.mkdir(parents=True, exist_ok=True)
    root = RngStream(args.seed)
    targets = sorted(set(sizes) | {D.n})
    logger.info(f"Dataset {args.data}: n={D.n}, p={D.p}, {int(D.labels.sum())} positive label(s)")

    curves = {}
    if imputes:
        X_model = D.features
        if args.unlabeled:
            extra = read_features(args.unlabeled, D.column_names)
            logger.info(f"Fitting the covariate model on {D.n} labeled + {extra.shape[0]} unlabeled row(s)")
            X_model = np.vstack([X_model, extra])
        model = fit_covariate_model(args.model, X_model, binary_columns)
        brie = brie_curve(D, model, targets, args.B, args.N, root.child(1), kappa=args.kappa, threads=args.threads)
        if Estimator.BRIE in estimators:
            curves[Estimator.BRIE] = brie
            write_curve(brie, out / "brie_curve.csv", anchor_column=True)
            logger.info(f"LOOCV anchor: tau({brie.anchor.size}) = {brie.anchor.cv_error:.4f}")
        if Estimator.IMPINT in estimators:
            curves[Estimator.IMPINT] = brie.base
            write_curve(brie.base, out / "impint_curve.csv")
    if Estimator.SUBEX in estimators:
        schedule = _parse_list(args.subex_schedule, "--subex-schedule") if args.subex_schedule else None
        subex = subex_curve(D, targets, root.child(2), schedule=schedule, B=args.subex_B, kappa=args.kappa,
                            include_cv_anchor=getattr(args, "subex_cv_anchor", False))
        curves[Estimator.SUBEX] = subex
        write_curve(subex, out / "subex_curve.csv")

    rows = []
    for name, curve in curves.items():
        for m in sizes:
            delta = delta_estimate(curve, D.n, m)
            rows.append({"estimator": name, "n": D.n, "m": m, "delta": delta.value, "interpolated": int(delta.interpolated)})
            logger.info(f"{name}: delta({D.n}, {m}) = {delta.value:+.4f}")
    write_frame(pd.DataFrame(rows, columns=["estimator", "n", "m", "delta", "interpolated"]), out / "delta.csv")

    if args.self_study:
        study_n = _parse_list(args.study_n, "--study-n", minimum=3)
        kinds = [k.strip().lower() for k in args.study_models.split(",") if k.strip()]
        logger.info(f"Resampling study: models {kinds}, n {study_n}, {args.study_reps} replicate(s)")
        table = dataset_study(D, kinds, study_n, multipliers=_parse_list(args.multipliers, "--multipliers", minimum=1),
                              reps=args.study_reps, rng=root.child(3), N=args.N, binary_columns=binary_columns,
                              kappa=args.kappa, threads=args.threads)
        write_frame(table, out / "dataset_study.csv")
    _write_manifest(args, out, started, started_at, args.seed)
    logger.info(f"Wrote estimates to {out}")


COMMANDS = {
    "truth": cmd_truth,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
}


def cmd_rerun(args):
    """Replay a manifest's command and arguments into a new output directory."""
    manifest = RunManifest.read(args.manifest)
    if manifest.command not in COMMANDS:
        raise DataError(f"Manifest names unknown command '{manifest.command}'.")
    replay = argparse.Namespace(**manifest.arguments, command=manifest.command, out=args.out, threads=args.threads)
    logger.info(f"Re-running '{manifest.command}' from {args.manifest}")
    COMMANDS[manifest.command](replay, config=manifest.config)


# ─── Parser ───────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcurve", description="Learning-curve estimation for logistic classifiers.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="Output directory")
    common.add_argument("--threads", type=int, default=1, help="Worker threads; outputs do not depend on it")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings only, no progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, help_text in (("truth", cmd_truth, "Monte-Carlo true learning curves"),
                                  ("simulate", cmd_simulate, "Replicated BRIE/SUBEX study against the truth")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--config", required=True, help="Study configuration file")
        p.add_argument("--seed", type=int, default=None, help="Overrides the config seed")
        p.set_defaults(func=func)

    p = sub.add_parser("estimate", parents=[common], help="Estimate learning curves for a CSV dataset")
    p.add_argument("--data", required=True, help="CSV with a header row")
    p.add_argument("--label", required=True, help="Name of the 0/1 label column")
    p.add_argument("--model", choices=ModelKind.LIST, default=ModelKind.MVN_AR1, help="Covariate model")
    p.add_argument("--binary-cols", default=None, help="Binary columns for the gm model (names or 0-based positions)")
    p.add_argument("--sizes", default=None, help="Target sizes, e.g. 100,150,200 or 100:301:50 (default: n)")
    p.add_argument("--B", type=int, default=DEFAULT_B, help="Imputed training sets per size")
    p.add_argument("--N", type=int, default=DEFAULT_N, help="Imputed test-set size")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--kappa", type=float, default=0.0, help="Classification threshold")
    p.add_argument("--estimators", default=Estimator.BRIE, help=f"Comma list from {Estimator.LIST}")
    p.add_argument("--subex-B", type=int, default=DEFAULT_SUBEX_B, help="Subsamples per SUBEX size")
    p.add_argument("--subex-schedule", default=None, help="SUBEX subsample sizes (default 0.3n..0.9n)")
    p.add_argument("--subex-cv-anchor", action="store_true", help="Add the LOOCV point (n-1, tau_CV) to the SUBEX fit")
    p.add_argument("--unlabeled", default=None, help="CSV of extra feature rows for the covariate model")
    p.add_argument("--allow-ill-posed", action="store_true", help="Continue when p >= n")
    p.add_argument("--self-study", action="store_true", help="Also run the resampling study on the dataset")
    p.add_argument("--study-models", default=f"{ModelKind.GAUSSIAN_MIXTURE},{ModelKind.GAUSSIAN_COPULA}")
    p.add_argument("--study-n", default="50,75,100,150", help="Subsample sizes of the resampling study")
    p.add_argument("--study-reps", type=int, default=1000)
    p.add_argument("--multipliers", default="1,2,3", help="Synthetic training-set sizes as multiples of n")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("rerun", parents=[common], help="Reproduce the outputs recorded by a manifest")
    p.add_argument("--manifest", required=True, help="manifest.json written by a previous run")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv: Optional[list[str]]=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_verbosity(logging.DEBUG)
    elif args.quiet:
        set_verbosity(logging.WARNING)
    else:
        set_verbosity(logging.INFO)
    for name in ("B", "N", "subex_B", "study_reps"):
        if getattr(args, name, 1) < 1:
            logger.error(f"--{name.replace('_', '-')} must be >= 1.")
            return DataError.exit_code
    try:
        args.func(args)
    except LearningCurveError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
