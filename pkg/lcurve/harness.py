"""
Simulation harness: a known logistic generative model, Monte-Carlo "true" learning curves,
replicated BRIE/SUBEX/IMPINT studies against them, and the resampling study for real data.
"""
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import scipy.special
from pydantic import BaseModel, Field, ValidationInfo, field_validator, model_validator

from .covariates import ModelKind, fit_covariate_model
from .curves import LearningCurve, Provenance, delta_estimate
from .errors import DataError, DomainError, StudyFailure
from .impint import DEFAULT_B, DEFAULT_N, brie_curve, impint_tau
from .logger import logger
from .logistic import Dataset, classify, fit_logistic_or_constant, loocv_error
from .subex import DEFAULT_SUBEX_B, subex_curve
from .utils_numerics import RngStream, ar1_covariance, sample_mvn
from .utils_parallel import map_ordered

DEFAULT_SEED = 20240101


class Estimator:
    BRIE = "brie"
    SUBEX = "subex"
    IMPINT = "impint"

    LIST = [BRIE, SUBEX, IMPINT]


class Quantity:
    TAU = "tau"
    DELTA = "delta"

    LIST = [TAU, DELTA]


# ─── Generative model ─────────────────────────────────────────

@dataclass
class GenerativeModel:
    """X ~ N(0, Sigma) with Sigma_ij = r^|i-j|; P(Y=1 | x) = expit(x'beta_star); no intercept."""
    p: int
    r: float
    beta_star: Optional[np.ndarray] = None
    kappa: float = 0.0

    def __post_init__(self):
        if self.p < 1:
            raise DomainError(f"Dimension must be >= 1, got p={self.p}.")
        if not -1.0 < self.r < 1.0:
            raise DomainError(f"Correlation must lie in (-1, 1), got r={self.r}.")
        self.beta_star = np.ones(self.p) if self.beta_star is None else np.asarray(self.beta_star, dtype=float)
        if self.beta_star.shape != (self.p,):
            raise DomainError(f"beta_star has shape {self.beta_star.shape}, expected ({self.p},).")
        self.covariance = ar1_covariance(self.p, self.r)

    def sample_features(self, m: int, rng: RngStream) -> np.ndarray:
        return sample_mvn(np.zeros(self.p), self.covariance, m, rng)

    def prob(self, X: np.ndarray) -> np.ndarray:
        return scipy.special.expit(X @ self.beta_star)

    def sample(self, m: int, rng: RngStream) -> Dataset:
        X = self.sample_features(m, rng.child(0))
        y = (rng.child(1).generator().random(m) < self.prob(X)).astype(np.int8)
        return Dataset(X, y)

    def conditional_error(self, fit, X_test: np.ndarray) -> float:
        """Error of a fitted rule given the test features: pi(x) where it says 0, 1 - pi(x) where it says 1."""
        pi = self.prob(X_test)
        predicted = classify(fit, X_test)
        return float(np.mean(np.where(predicted == 1, 1.0 - pi, pi)))


def true_curve_oracle(gm: GenerativeModel, sizes: Sequence[int], reps: int, N: int, rng: RngStream,
                      threads: int=1) -> LearningCurve:
    """
    Monte-Carlo tau(m): per size, `reps` training draws, each fitted without an intercept and
    scored by its expected error over a fresh N-point test draw using the known pi.
    std_errors holds the Monte-Carlo standard error of each mean.
    """
    sizes = sorted(set(int(m) for m in sizes))
    if not sizes or sizes[0] < gm.p + 2:
        raise DomainError(f"Oracle sizes must be >= p + 2 = {gm.p + 2}, got {sizes}.")
    if reps < 1 or N < 1:
        raise DomainError(f"reps and N must be >= 1, got reps={reps}, N={N}.")

    def one(task: tuple[int, int]) -> float:
        m, rep = task
        stream = rng.child(m, rep)
        train = gm.sample(m, stream.child(0))
        fit = fit_logistic_or_constant(train, include_intercept=False, kappa=gm.kappa)
        return gm.conditional_error(fit, gm.sample_features(N, stream.child(1)))

    tasks = [(m, rep) for m in sizes for rep in range(reps)]
    errors = np.array(map_ordered(one, tasks, threads=threads, desc=f"Oracle p={gm.p} r={gm.r:g}")).reshape(len(sizes), reps)
    std_errors = errors.std(axis=1, ddof=1) / np.sqrt(reps) if reps > 1 else np.full(len(sizes), np.nan)
    return LearningCurve(sizes=np.array(sizes), values=errors.mean(axis=1), provenance=Provenance.ORACLE,
                         std_errors=std_errors)


# ─── Study configuration ──────────────────────────────────────

class Scenario(BaseModel):
    """One generative model of the study grid."""
    p: int = Field(..., ge=1, description="Number of covariates")
    r: float = Field(..., gt=-1.0, lt=1.0, description="AR(1) correlation between adjacent covariates")
    beta: Optional[list[float]] = Field(None, description="True coefficients; all ones when omitted")

    @model_validator(mode="after")
    def _beta_matches_p(self):
        if self.beta is not None and len(self.beta) != self.p:
            raise ValueError(f"beta has {len(self.beta)} entries but p={self.p}")
        return self

    def generative_model(self, kappa: float=0.0) -> GenerativeModel:
        return GenerativeModel(p=self.p, r=self.r, beta_star=self.beta, kappa=kappa)


class StudyConfig(BaseModel):
    """Resolved configuration of a truth or simulation run."""
    scenarios: list[Scenario] = Field(..., min_length=1, description="Generative models to study")
    n: int = Field(50, ge=4, description="Training-set size of every replicate")
    sizes: list[int] = Field([75, 100, 150, 200], min_length=1, description="Target training-set sizes")
    estimators: list[str] = Field([Estimator.BRIE, Estimator.SUBEX], min_length=1, description="Estimators to run")
    model: str = Field(ModelKind.MVN_AR1, validate_default=True, description="Covariate model fitted for BRIE and IMPINT")
    replicates: int = Field(1000, ge=1, description="Monte-Carlo replicates")
    B: int = Field(DEFAULT_B, ge=1, description="Imputed training sets per size")
    N: int = Field(DEFAULT_N, ge=1, description="Imputed test-set size")
    seed: int = Field(DEFAULT_SEED, ge=0, description="Master seed")
    subex_B: int = Field(DEFAULT_SUBEX_B, ge=1, description="Subsamples per SUBEX size")
    subex_schedule: Optional[list[int]] = Field(None, description="SUBEX subsample sizes; default 0.3n..0.9n")
    subex_cv_anchor: bool = Field(False, description="Add the LOOCV point (n-1, tau_CV) to the SUBEX fit")
    oracle_reps: int = Field(500, ge=1, description="Training draws per size for the true curve")
    oracle_N: int = Field(5000, ge=1, description="Test draws per training draw for the true curve")
    kappa: float = Field(0.0, description="Classification threshold")

    @field_validator("sizes", "subex_schedule")
    @classmethod
    def _sorted_unique(cls, v):
        if v is None:
            return v
        if any(m < 1 for m in v):
            raise ValueError(f"sizes must be positive, got {v}")
        return sorted(set(v))

    @field_validator("estimators")
    @classmethod
    def _known_estimators(cls, v):
        unknown = [e for e in v if e not in Estimator.LIST]
        if unknown:
            raise ValueError(f"unknown estimator(s) {unknown}; expected a subset of {Estimator.LIST}")
        return [e for e in Estimator.LIST if e in v]

    @field_validator("model")
    @classmethod
    def _known_model(cls, v, info: ValidationInfo):
        # simulated covariates are all continuous, so there is nothing to stratify a mixture on
        allowed = [k for k in ModelKind.LIST if k != ModelKind.GAUSSIAN_MIXTURE]
        if v not in allowed:
            raise ValueError(f"model must be one of {allowed}, got '{v}'")
        scenarios = info.data.get("scenarios") or []
        imputes = {Estimator.BRIE, Estimator.IMPINT} & set(info.data.get("estimators") or [])
        if v == ModelKind.MVN_AR1 and imputes and any(s.p < 2 for s in scenarios):
            raise ValueError(f"model '{v}' needs p >= 2 in every scenario; use mvn-full or gc for p = 1")
        return v

    @model_validator(mode="after")
    def _sizes_fit_scenarios(self):
        p_max = max(s.p for s in self.scenarios)
        if self.sizes[0] < p_max + 2:
            raise ValueError(f"sizes must be >= p + 2 = {p_max + 2} for every scenario, got {self.sizes[0]}")
        if self.n - 1 < p_max + 2:
            raise ValueError(f"n - 1 must be >= p + 2 = {p_max + 2}, got n={self.n}")
        if self.subex_schedule is not None:
            bad = [s for s in self.subex_schedule if not 2 <= s <= self.n - 2]
            if bad:
                raise ValueError(f"subex_schedule sizes {bad} violate 2 <= m' <= n-2 = {self.n - 2}")
        return self

    def target_sizes(self) -> list[int]:
        return sorted(set(self.sizes) | {self.n})


# ─── Study results ────────────────────────────────────────────

@dataclass
class StudyRow:
    p: int
    r: float
    estimator: str
    quantity: str
    m_from: Optional[int]
    m_to: int
    truth: float
    mean: float
    sd: Optional[float]


@dataclass
class StudyResult:
    config: StudyConfig
    rows: list[StudyRow] = field(default_factory=list)
    oracles: list[LearningCurve] = field(default_factory=list)
    scenario_seconds: list[float] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        columns = ["p", "r", "estimator", "quantity", "m_from", "m_to", "truth", "mean", "sd"]
        frame = pd.DataFrame([vars(row) for row in self.rows], columns=columns)
        frame["m_from"] = frame["m_from"].astype("Int64")
        return frame


def _estimator_curves(cfg: StudyConfig, gm: GenerativeModel, rng: RngStream) -> dict[str, LearningCurve]:
    D = gm.sample(cfg.n, rng.child(0))
    sizes = cfg.target_sizes()
    curves = {}
    if Estimator.BRIE in cfg.estimators or Estimator.IMPINT in cfg.estimators:
        model = fit_covariate_model(cfg.model, D.features)
        brie = brie_curve(D, model, sizes, cfg.B, cfg.N, rng.child(1), kappa=gm.kappa, include_intercept=False)
        if Estimator.BRIE in cfg.estimators:
            curves[Estimator.BRIE] = brie
        if Estimator.IMPINT in cfg.estimators:
            curves[Estimator.IMPINT] = brie.base
    if Estimator.SUBEX in cfg.estimators:
        curves[Estimator.SUBEX] = subex_curve(D, sizes, rng.child(2), schedule=cfg.subex_schedule, B=cfg.subex_B,
                                              include_intercept=False, kappa=gm.kappa,
                                              include_cv_anchor=cfg.subex_cv_anchor)
    return curves


def _replicate_summary(cfg: StudyConfig, curves: dict[str, LearningCurve]) -> dict[tuple[str, str, int], float]:
    values = {}
    for name, curve in curves.items():
        reported, _ = curve.reported()
        for m in cfg.sizes:
            values[(name, Quantity.TAU, m)] = float(reported[np.flatnonzero(curve.sizes == m)[0]])
            values[(name, Quantity.DELTA, m)] = delta_estimate(curve, cfg.n, m).value
    return values


def run_mc_study(cfg: StudyConfig, threads: int=1) -> StudyResult:
    """
    Replicate BRIE/SUBEX/IMPINT on draws from each scenario and compare to the true curve.

    Replicate r of scenario s uses stream (seed, r, (s, 0)); the oracle uses (seed, 0, (s, 1)).
    Per-replicate values are kept and reduced in replicate order, so the result does not
    depend on `threads`. Any failed replicate aborts the study with StudyFailure.
    """
    result = StudyResult(config=cfg)
    for s, scenario in enumerate(cfg.scenarios):
        started = time.perf_counter()
        gm = scenario.generative_model(cfg.kappa)
        logger.info(f"Scenario {s + 1}/{len(cfg.scenarios)}: p={gm.p}, r={gm.r:g}")
        oracle = true_curve_oracle(gm, cfg.target_sizes(), cfg.oracle_reps, cfg.oracle_N,
                                   RngStream(cfg.seed, 0, (s, 1)), threads=threads)
        result.oracles.append(oracle)

        def replicate(r: int):
            try:
                return _replicate_summary(cfg, _estimator_curves(cfg, gm, RngStream(cfg.seed, r, (s, 0))))
            except Exception as e:
                return e

        outcomes = map_ordered(replicate, range(cfg.replicates), threads=threads, desc="Replicates")
        failures = [(r, f"{type(o).__name__}: {o}") for r, o in enumerate(outcomes) if isinstance(o, Exception)]
        if failures:
            for r, message in failures:
                logger.error(f"Scenario p={gm.p} r={gm.r:g}, replicate {r} failed: {message}")
            raise StudyFailure(failures)

        for estimator in cfg.estimators:
            for quantity in Quantity.LIST:
                for m in cfg.sizes:
                    samples = np.array([o[(estimator, quantity, m)] for o in outcomes])
                    if quantity == Quantity.TAU:
                        truth = oracle.value_at(m).value
                    else:
                        truth = oracle.value_at(cfg.n).value - oracle.value_at(m).value
                    result.rows.append(StudyRow(
                        p=gm.p, r=gm.r, estimator=estimator, quantity=quantity,
                        m_from=cfg.n if quantity == Quantity.DELTA else None, m_to=m, truth=truth,
                        mean=float(samples.mean()),
                        sd=float(samples.std(ddof=1)) if samples.size > 1 else None))
        result.scenario_seconds.append(time.perf_counter() - started)
        logger.info(f"Scenario {s + 1} finished in {result.scenario_seconds[-1]:.1f}s")
    return result


# ─── Dataset study ────────────────────────────────────────────

def dataset_study(D: Dataset, model_kinds: Sequence[str], n_list: Sequence[int], multipliers: Sequence[int]=(1, 2, 3),
                  reps: int=1000, rng: RngStream=None, N: int=DEFAULT_N, binary_columns: Optional[list[int]]=None,
                  kappa: float=0.0, threads: int=1) -> pd.DataFrame:
    """
    Resampling study on a real dataset.

    Each replicate subsamples n rows, records their LOOCV error, fits a logistic model with
    intercept and each covariate model, and estimates tau at every n*k from one synthetic
    training set per multiple, all scored against one shared synthetic test set of size N.
    Returns one row per (model, n) with mean CV, mean tau per multiple, mean gains
    tau(n) - tau(kn), and the direct CV gain to the next n.
    """
    n_list = sorted(set(int(n) for n in n_list))
    multipliers = sorted(set(int(k) for k in multipliers) | {1})
    if not n_list or n_list[0] < 3 or n_list[-1] > D.n:
        raise DataError(f"Every n must satisfy 3 <= n <= {D.n}, got {n_list}.")
    if not multipliers or multipliers[0] < 1:
        raise DataError(f"Multipliers must be positive integers, got {multipliers}.")
    unknown = [k for k in model_kinds if k not in ModelKind.LIST]
    if unknown:
        raise DataError(f"Unknown covariate model(s) {unknown}; expected a subset of {ModelKind.LIST}.")
    rng = rng or RngStream(DEFAULT_SEED)

    def replicate(rep: int) -> np.ndarray:
        # axes: (n, kind, [cv, tau per multiplier])
        out = np.empty((len(n_list), len(model_kinds), 1 + len(multipliers)))
        for i, n in enumerate(n_list):
            stream = rng.child(rep, n)
            sub = D.subset(stream.child(0).generator().permutation(D.n)[:n])
            out[i, :, 0] = loocv_error(sub, include_intercept=True, kappa=kappa)
            fit = fit_logistic_or_constant(sub, include_intercept=True, kappa=kappa)
            for j, kind in enumerate(model_kinds):
                model = fit_covariate_model(kind, sub.features, binary_columns)
                for k_idx, k in enumerate(multipliers):
                    # same substream for every multiple: one shared test set
                    out[i, j, 1 + k_idx] = impint_tau(model, fit.beta, kappa, k * n, 1, N, stream.child(1 + j),
                                                      include_intercept=True, constant_class=fit.constant_class)
        return out

    results = np.stack(map_ordered(replicate, range(reps), threads=threads, desc="Dataset study"))
    means = results.mean(axis=0)
    rows = []
    for j, kind in enumerate(model_kinds):
        for i, n in enumerate(n_list):
            row = {"model": kind, "n": n, "cv": means[i, j, 0]}
            for k_idx, k in enumerate(multipliers):
                row[f"tau_x{k}"] = means[i, j, 1 + k_idx]
            for k_idx, k in enumerate(multipliers):
                row[f"gain_x{k}"] = float(np.mean(results[:, i, j, 1] - results[:, i, j, 1 + k_idx]))
            row["cv_gain"] = means[i, j, 0] - means[i + 1, j, 0] if i + 1 < len(n_list) else np.nan
            rows.append(row)
    return pd.DataFrame(rows)
