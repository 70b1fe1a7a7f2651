"""Experiment harness: configs, seeded replicates, and result tables.

A single JSON config file describes one experiment; replicate r always
runs with seed base_seed + r, so (config, base_seed) pins every output
byte. Result tables exist in three shapes - per-replicate rows, the
alpha sweep summary, and the variant comparison - each serialized to
CSV (versioned header comment) or a JSON mirror of the same fields.

Wall-clock time is measured per replicate and kept on the in-memory row
for interactive use, but never written to output files: files are part
of the reproducibility contract and must be byte-identical across
reruns of the same config and seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .batch import BatchConfig, run_batch
from .diagnostics import analyze, miss_probability_bound, phi
from .errors import ConfigError
from .memoryless import MemorylessConfig, run_memoryless
from .model import BernoulliParams, Objective, RngStream, elite_count
from .objectives import KINDS, ProblemSpec, make_objective
from .trace import RunTrace
from .window import OnlineConfig, run_online_window

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "SweepRow",
    "CompareRow",
    "VARIANTS",
    "parse_config",
    "load_config",
    "config_to_dict",
    "default_config_dict",
    "run_variant",
    "run_experiment",
    "alpha_sweep",
    "compare_variants",
    "wilson_interval",
    "results_to_csv",
    "results_to_json",
    "sweep_to_csv",
    "sweep_to_json",
    "compare_to_csv",
    "compare_to_json",
]

VARIANTS = ("batch", "window", "memoryless")
FORMATS = ("csv", "json")

NEVER = "never"

RESULTS_SCHEMA = "cemkit-results-v1"
SWEEP_SCHEMA = "cemkit-sweep-v1"
COMPARE_SCHEMA = "cemkit-compare-v1"


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a problem, a variant, its knobs, and the seeds.

    T counts batch generations, K counts online samples; both are kept
    so a config can serve `compare` unchanged, where the budgets must
    match (T*N == K). Fields irrelevant to the selected variant are
    simply unused.
    """

    problem: ProblemSpec
    variant: str = "batch"
    N: int = 100
    rho: float = 0.1
    alpha: float = 0.7
    T: int = 50
    K: int = 5000
    replicates: int = 100
    base_seed: int = 12345
    estimator: str = "gauss_model"
    beta: float = 0.1
    gamma0: Optional[float] = None
    delta0: Optional[float] = None
    delta0_mode: str = "nominal"
    delta_init: float = 0.0
    delta_min: float = 0.0
    eps_conv: Optional[float] = None
    eps_binary: float = 1e-3
    snapshot_stride: Optional[int] = None
    alphas: Optional[Tuple[float, ...]] = None
    jobs: int = 1
    output_path: Optional[str] = None
    output_format: str = "csv"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant: must be one of {VARIANTS}, got {self.variant!r}")
        if self.replicates < 1:
            raise ConfigError(f"replicates: must be >= 1, got {self.replicates}")
        if self.base_seed < 0:
            raise ConfigError(f"base_seed: must be >= 0, got {self.base_seed}")
        if not 0.0 < self.eps_binary < 0.5:
            raise ConfigError(f"eps_binary: must be in (0,0.5), got {self.eps_binary}")
        if self.jobs < 1:
            raise ConfigError(f"jobs: must be >= 1, got {self.jobs}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"output_format: must be one of {FORMATS}, got {self.output_format!r}")
        if self.alphas is not None:
            if len(self.alphas) == 0:
                raise ConfigError("alphas: must be non-empty when given")
            for a in self.alphas:
                if not 0.0 < a <= 1.0:
                    raise ConfigError(f"alphas: every entry must be in (0,1], got {a}")


@dataclass
class ResultRow:
    """One replicate's outcome. wall_clock never reaches output files."""

    replicate: int
    seed: int
    variant: str
    steps: int
    first_hit: Optional[int]
    best_value: float
    converged_binary: bool
    converged_step: Optional[int]
    sign_changes_total: int
    envelope_violations: int
    wall_clock: float


@dataclass
class SweepRow:
    """Summary for one alpha value in a sweep."""

    alpha: float
    replicates: int
    hits: int
    hit_rate: float
    ci_low: float
    ci_high: float
    miss_rate: float
    miss_bound: float


@dataclass
class CompareRow:
    """Summary for one variant at a matched budget."""

    variant: str
    replicates: int
    budget: int
    hits: int
    hit_rate: float
    mean_first_hit: Optional[float]
    n_converged: int
    mean_converged_step: Optional[float]


# ---------------------------------------------------------------------------
# Config plumbing

_CONFIG_KEYS = {
    "problem",
    "variant",
    "N",
    "rho",
    "alpha",
    "T",
    "K",
    "replicates",
    "base_seed",
    "estimator",
    "beta",
    "gamma0",
    "delta0",
    "delta0_mode",
    "delta_init",
    "delta_min",
    "eps_conv",
    "eps_binary",
    "snapshot_stride",
    "alphas",
    "jobs",
    "output",
}

_PROBLEM_KEYS = {"kind", "n", "weights", "k", "edges"}


def _parse_problem(data: Dict) -> ProblemSpec:
    if not isinstance(data, dict):
        raise ConfigError("problem: must be an object with at least 'kind' and 'n'")
    unknown = set(data) - _PROBLEM_KEYS
    if unknown:
        raise ConfigError(f"problem: unknown field(s) {sorted(unknown)}")
    if "kind" not in data or "n" not in data:
        raise ConfigError("problem: 'kind' and 'n' are required")
    weights = data.get("weights")
    edges = data.get("edges")
    return ProblemSpec(
        kind=data["kind"],
        n=int(data["n"]),
        weights=None if weights is None else tuple(float(w) for w in weights),
        k=None if data.get("k") is None else int(data["k"]),
        edges=None if edges is None else tuple((int(i), int(j)) for i, j in edges),
    )


def parse_config(data: Dict, require_problem: bool = True) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from a plain dict.

    Unknown keys are errors: configs are part of the reproducibility
    record and a silently ignored typo would poison it. The selected
    variant's engine config is constructed once here so engine-level
    constraint violations surface at parse time.
    """
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    if require_problem and "problem" not in data:
        raise ConfigError("problem: required")

    output = data.get("output", {})
    if output and not isinstance(output, dict):
        raise ConfigError("output: must be an object {path, format}")
    out_unknown = set(output) - {"path", "format"}
    if out_unknown:
        raise ConfigError(f"output: unknown field(s) {sorted(out_unknown)}")

    defaults = ExperimentConfig(problem=ProblemSpec(kind="onemax", n=1))

    def opt_float(key: str) -> Optional[float]:
        v = data.get(key, getattr(defaults, key))
        return None if v is None else float(v)

    def opt_int(key: str) -> Optional[int]:
        v = data.get(key, getattr(defaults, key))
        return None if v is None else int(v)

    alphas = data.get("alphas")
    cfg = ExperimentConfig(
        problem=_parse_problem(data["problem"]) if "problem" in data else defaults.problem,
        variant=data.get("variant", defaults.variant),
        N=int(data.get("N", defaults.N)),
        rho=float(data.get("rho", defaults.rho)),
        alpha=float(data.get("alpha", defaults.alpha)),
        T=int(data.get("T", defaults.T)),
        K=int(data.get("K", defaults.K)),
        replicates=int(data.get("replicates", defaults.replicates)),
        base_seed=int(data.get("base_seed", defaults.base_seed)),
        estimator=data.get("estimator", defaults.estimator),
        beta=float(data.get("beta", defaults.beta)),
        gamma0=opt_float("gamma0"),
        delta0=opt_float("delta0"),
        delta0_mode=data.get("delta0_mode", defaults.delta0_mode),
        delta_init=float(data.get("delta_init", defaults.delta_init)),
        delta_min=float(data.get("delta_min", defaults.delta_min)),
        eps_conv=opt_float("eps_conv"),
        eps_binary=float(data.get("eps_binary", defaults.eps_binary)),
        snapshot_stride=opt_int("snapshot_stride"),
        alphas=None if alphas is None else tuple(float(a) for a in alphas),
        jobs=int(data.get("jobs", defaults.jobs)),
        output_path=output.get("path"),
        output_format=output.get("format", defaults.output_format),
    )
    if require_problem:
        make_objective(cfg.problem)
        _variant_config(cfg)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc
    return parse_config(data)


def config_to_dict(cfg: ExperimentConfig) -> Dict:
    """Full, explicit dict form of a config (the config-dump payload)."""
    prob: Dict = {"kind": cfg.problem.kind, "n": cfg.problem.n}
    if cfg.problem.weights is not None:
        prob["weights"] = list(cfg.problem.weights)
    if cfg.problem.k is not None:
        prob["k"] = cfg.problem.k
    if cfg.problem.edges is not None:
        prob["edges"] = [list(e) for e in cfg.problem.edges]
    return {
        "problem": prob,
        "variant": cfg.variant,
        "N": cfg.N,
        "rho": cfg.rho,
        "alpha": cfg.alpha,
        "T": cfg.T,
        "K": cfg.K,
        "replicates": cfg.replicates,
        "base_seed": cfg.base_seed,
        "estimator": cfg.estimator,
        "beta": cfg.beta,
        "gamma0": cfg.gamma0,
        "delta0": cfg.delta0,
        "delta0_mode": cfg.delta0_mode,
        "delta_init": cfg.delta_init,
        "delta_min": cfg.delta_min,
        "eps_conv": cfg.eps_conv,
        "eps_binary": cfg.eps_binary,
        "snapshot_stride": cfg.snapshot_stride,
        "alphas": None if cfg.alphas is None else list(cfg.alphas),
        "jobs": cfg.jobs,
        "output": {"path": cfg.output_path, "format": cfg.output_format},
    }


def default_config_dict() -> Dict:
    """Defaults with a placeholder problem, for `config-dump` without -c."""
    return config_to_dict(ExperimentConfig(problem=ProblemSpec(kind="onemax", n=20)))


# ---------------------------------------------------------------------------
# Execution

@lru_cache(maxsize=8)
def _cached_objective(spec: ProblemSpec) -> Objective:
    # MaxCut metadata costs an enumeration; build each instance once per
    # process.
    return make_objective(spec)


def _variant_config(cfg: ExperimentConfig):
    if cfg.variant == "batch":
        return BatchConfig(
            N=cfg.N,
            rho=cfg.rho,
            alpha=cfg.alpha,
            T=cfg.T,
            eps_conv=cfg.eps_conv if cfg.eps_conv is not None else 1e-6,
        )
    if cfg.variant == "window":
        return OnlineConfig(
            N=cfg.N,
            rho=cfg.rho,
            alpha=cfg.alpha,
            K=cfg.K,
            eps_conv=cfg.eps_conv,
            snapshot_stride=cfg.snapshot_stride,
        )
    return MemorylessConfig(
        N=cfg.N,
        rho=cfg.rho,
        alpha=cfg.alpha,
        K=cfg.K,
        gamma0=cfg.gamma0,
        estimator=cfg.estimator,
        beta=cfg.beta,
        delta0=cfg.delta0,
        delta0_mode=cfg.delta0_mode,
        delta_init=cfg.delta_init,
        delta_min=cfg.delta_min,
        eps_conv=cfg.eps_conv,
        snapshot_stride=cfg.snapshot_stride,
    )


def run_variant(cfg: ExperimentConfig, obj: Objective, rng: RngStream) -> RunTrace:
    """Run the configured variant once."""
    vc = _variant_config(cfg)
    if cfg.variant == "batch":
        return run_batch(vc, obj, rng)
    if cfg.variant == "window":
        return run_online_window(vc, obj, rng)
    return run_memoryless(vc, obj, rng)


def _run_one(cfg: ExperimentConfig, obj: Objective, r: int) -> ResultRow:
    seed = cfg.base_seed + r
    rng = RngStream(seed)
    t0 = time.perf_counter()
    trace = run_variant(cfg, obj, rng)
    wall = time.perf_counter() - t0
    report = analyze(trace, obj, cfg.eps_binary)
    assert trace.best is not None
    return ResultRow(
        replicate=r,
        seed=seed,
        variant=trace.variant,
        steps=trace.steps,
        first_hit=trace.first_hit_step,
        best_value=trace.best.value,
        converged_binary=report.converged_binary,
        converged_step=report.converged_step,
        sign_changes_total=int(trace.sign_changes.sum()),
        envelope_violations=report.envelope_violations,
        wall_clock=wall,
    )


def _replicate_task(payload: Tuple[ExperimentConfig, int]) -> ResultRow:
    cfg, r = payload
    return _run_one(cfg, _cached_objective(cfg.problem), r)


def run_experiment(cfg: ExperimentConfig, jobs: Optional[int] = None) -> List[ResultRow]:
    """Execute all replicates; rows come back in replicate order.

    jobs > 1 fans replicates out to worker processes; results are
    identical to the sequential run because each replicate owns its
    seed and rows are collected in submission order.
    """
    n_jobs = cfg.jobs if jobs is None else jobs
    if n_jobs < 1:
        raise ConfigError(f"jobs: must be >= 1, got {n_jobs}")
    tasks = [(cfg, r) for r in range(cfg.replicates)]
    if n_jobs == 1:
        obj = _cached_objective(cfg.problem)
        return [_run_one(cfg, obj, r) for r in range(cfg.replicates)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_replicate_task, tasks))


def wilson_interval(hits: int, n: int, z: float = 1.959963984540054) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= hits <= n:
        raise ValueError(f"hits must be in [0, {n}], got {hits}")
    p_hat = hits / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p_hat + z2 / (2 * n)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _sweep_miss_bound(cfg: ExperimentConfig, obj: Objective, alpha: float) -> float:
    """Reference bound column: exp(-phi1*h(alpha1)) at the uniform start."""
    p0 = BernoulliParams.uniform_init(obj.n)
    phi1 = phi(p0, obj.optimal_bits)
    if cfg.variant == "batch":
        alpha1 = alpha
    else:
        alpha1 = alpha / elite_count(cfg.N, cfg.rho)
    if alpha1 >= 1.0:
        return 1.0
    return miss_probability_bound(phi1, alpha1, obj.n)


def alpha_sweep(
    cfg: ExperimentConfig, alphas: Optional[Sequence[float]] = None, jobs: Optional[int] = None
) -> List[SweepRow]:
    """Replicate batches at several alphas, same seeds for each alpha.

    Needs a problem with known optimum: the summary is the hit rate with
    a 95% Wilson interval, next to the theoretical miss bound for the
    per-update step size in force.
    """
    grid = tuple(alphas) if alphas is not None else cfg.alphas
    if grid is None or len(grid) == 0:
        raise ConfigError("alphas: required for an alpha sweep")
    obj = _cached_objective(cfg.problem)
    if obj.optimal_bits is None or obj.optimal_value is None:
        raise ConfigError("problem: alpha sweep requires a problem with known optimum")
    out: List[SweepRow] = []
    for a in grid:
        sub = replace(cfg, alpha=float(a), alphas=None)
        rows = run_experiment(sub, jobs)
        hits = sum(1 for row in rows if row.first_hit is not None)
        n = len(rows)
        lo, hi = wilson_interval(hits, n)
        out.append(
            SweepRow(
                alpha=float(a),
                replicates=n,
                hits=hits,
                hit_rate=hits / n,
                ci_low=lo,
                ci_high=hi,
                miss_rate=(n - hits) / n,
                miss_bound=_sweep_miss_bound(cfg, obj, float(a)),
            )
        )
    return out


def compare_variants(cfg: ExperimentConfig, jobs: Optional[int] = None) -> List[CompareRow]:
    """All three variants on the same problem, same seeds, same budget.

    Refuses configs whose evaluation budgets differ: the batch side
    spends T*N evaluations, the online sides spend K, and a comparison
    is only fair when those are equal.
    """
    if cfg.T * cfg.N != cfg.K:
        raise ConfigError(
            f"K: matched budgets require T*N == K, got T*N={cfg.T * cfg.N} and K={cfg.K}"
        )
    obj = _cached_objective(cfg.problem)
    if obj.optimal_bits is None or obj.optimal_value is None:
        raise ConfigError("problem: variant comparison requires a problem with known optimum")
    out: List[CompareRow] = []
    for variant in VARIANTS:
        sub = replace(cfg, variant=variant)
        rows = run_experiment(sub, jobs)
        hits = [row.first_hit for row in rows if row.first_hit is not None]
        conv = [row.converged_step for row in rows if row.converged_step is not None]
        out.append(
            CompareRow(
                variant=variant,
                replicates=len(rows),
                budget=cfg.K,
                hits=len(hits),
                hit_rate=len(hits) / len(rows),
                mean_first_hit=(sum(hits) / len(hits)) if hits else None,
                n_converged=len(conv),
                mean_converged_step=(sum(conv) / len(conv)) if conv else None,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Serialization

def _cell(v) -> str:
    if v is None:
        return NEVER
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v):
    return NEVER if v is None else v


def _csv_table(comment: str, header: List[str], rows: List[List]) -> str:
    buf = io.StringIO()
    buf.write(comment + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


_RESULT_FIELDS = [
    "replicate",
    "seed",
    "variant",
    "steps",
    "first_hit",
    "best_value",
    "converged_binary",
    "converged_step",
    "sign_changes_total",
    "envelope_violations",
]


def results_to_csv(rows: List[ResultRow]) -> str:
    return _csv_table(
        f"# {RESULTS_SCHEMA}",
        _RESULT_FIELDS,
        [[getattr(r, f) for f in _RESULT_FIELDS] for r in rows],
    )


def results_to_json(rows: List[ResultRow]) -> str:
    payload = {
        "schema": RESULTS_SCHEMA,
        "rows": [
            {f: _json_value(getattr(r, f)) for f in _RESULT_FIELDS} for r in rows
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


_SWEEP_FIELDS = [
    "alpha",
    "replicates",
    "hits",
    "hit_rate",
    "ci_low",
    "ci_high",
    "miss_rate",
    "miss_bound",
]


def sweep_to_csv(rows: List[SweepRow]) -> str:
    return _csv_table(
        f"# {SWEEP_SCHEMA}",
        _SWEEP_FIELDS,
        [[getattr(r, f) for f in _SWEEP_FIELDS] for r in rows],
    )


def sweep_to_json(rows: List[SweepRow]) -> str:
    payload = {
        "schema": SWEEP_SCHEMA,
        "rows": [{f: _json_value(getattr(r, f)) for f in _SWEEP_FIELDS} for r in rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


_COMPARE_FIELDS = [
    "variant",
    "replicates",
    "budget",
    "hits",
    "hit_rate",
    "mean_first_hit",
    "n_converged",
    "mean_converged_step",
]


def compare_to_csv(rows: List[CompareRow]) -> str:
    return _csv_table(
        f"# {COMPARE_SCHEMA}",
        _COMPARE_FIELDS,
        [[getattr(r, f) for f in _COMPARE_FIELDS] for r in rows],
    )


def compare_to_json(rows: List[CompareRow]) -> str:
    payload = {
        "schema": COMPARE_SCHEMA,
        "rows": [{f: _json_value(getattr(r, f)) for f in _COMPARE_FIELDS} for r in rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
