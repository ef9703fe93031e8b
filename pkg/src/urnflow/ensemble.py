"""Parallel Monte Carlo over replicate chain runs.

Estimates the establishment probability (reaching a large population
threshold before extinction) with a Wilson interval, and tracks distance
to a target attractor at step checkpoints.  Replicate r draws from the
stream keyed by (master_seed, r), so results are identical for any worker
count; aggregation reduces over the replicate index, never over
completion order.  Censored runs (horizon reached with the population
strictly between zero and the threshold) are reported separately.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import AttractorSpec, attractor_distance
from .urn import PathRecord, StopCondition, UrnModel, simulate

WILSON_Z = 1.96  # 95% score interval

OUTCOMES = ("established", "extinct", "censored")


@dataclass(frozen=True)
class EnsembleConfig:
    """Replicate count, seeding, initial state, stop rule, and targets.

    The stop rule should include the survival threshold as
    max_population; runs are "established" when they stop by reaching it,
    "extinct" at population zero, "censored" otherwise.
    """

    replicates: int
    master_seed: int
    z0: np.ndarray
    stop: StopCondition
    survival_threshold: int
    attractor: AttractorSpec | None = None
    distance_checkpoints: tuple[int, ...] = ()
    thin: int | None = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        z0 = np.ascontiguousarray(self.z0, dtype=np.int64)
        object.__setattr__(self, "z0", z0)
        if self.survival_threshold <= int(z0.sum()):
            raise ValueError("survival threshold must exceed |z0|")
        object.__setattr__(
            self, "distance_checkpoints", tuple(int(c) for c in self.distance_checkpoints)
        )

    @property
    def auto_thin(self) -> int:
        if self.thin is not None:
            return self.thin
        if self.stop.max_steps is not None:
            return max(1, self.stop.max_steps // 2048)
        return 256


@dataclass
class RunSummary:
    """Per-replicate outcome and diagnostics."""

    replicate: int
    outcome: str
    steps: int
    final_pop: int
    final_tau: float
    distances: np.ndarray  # one per checkpoint, then the final state
    s15_total: float
    s15_at90: float  # running sum at 90% of the realized steps
    s20_total: float
    s20_at90: float


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    model_name: str
    summaries: list[RunSummary]

    @property
    def outcome_counts(self) -> dict[str, int]:
        counts = {o: 0 for o in OUTCOMES}
        for s in self.summaries:
            counts[s.outcome] += 1
        return counts

    @property
    def established(self) -> int:
        return self.outcome_counts["established"]

    def distance_matrix(self) -> np.ndarray:
        """(replicates, checkpoints+1) distances; NaN where unavailable."""
        return np.array([s.distances for s in self.summaries])


def wilson_interval(successes: int, total: int, z: float = WILSON_Z) -> tuple[float, float]:
    """95% Wilson score interval for a binomial fraction."""
    if total <= 0:
        raise ValueError("total must be positive")
    phat = successes / total
    denom = 1.0 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def establishment_probability(result: EnsembleResult) -> tuple[float, tuple[float, float]]:
    """Point estimate and 95% Wilson interval of the establishment fraction."""
    n = len(result.summaries)
    est = result.established
    return est / n, wilson_interval(est, n)


def _summarize(path: PathRecord, cfg: EnsembleConfig, replicate: int) -> RunSummary:
    pop = path.population
    final_pop = int(pop[-1])
    if final_pop >= cfg.survival_threshold:
        outcome = "established"
    elif final_pop == 0:
        outcome = "extinct"
    else:
        outcome = "censored"

    ckpts = cfg.distance_checkpoints
    dists = np.full(len(ckpts) + 1, np.nan)
    if cfg.attractor is not None:
        freqs = path.frequencies
        for i, c in enumerate(ckpts):
            row = int(np.searchsorted(path.n, c))
            if row < len(path.n) and path.n[row] == c and pop[row] > 0:
                dists[i] = attractor_distance(freqs[row], cfg.attractor)
        if final_pop > 0:
            dists[-1] = attractor_distance(freqs[-1], cfg.attractor)

    n90 = int(0.9 * path.steps)
    row90 = min(int(np.searchsorted(path.n, n90)), len(path.n) - 1)
    return RunSummary(
        replicate=replicate,
        outcome=outcome,
        steps=path.steps,
        final_pop=final_pop,
        final_tau=path.final_tau,
        distances=dists,
        s15_total=float(path.s15[-1]),
        s15_at90=float(path.s15[row90]),
        s20_total=float(path.s20[-1]),
        s20_at90=float(path.s20[row90]),
    )


def run_ensemble(model: UrnModel, cfg: EnsembleConfig, jobs: int = 1) -> EnsembleResult:
    """Run all replicates (thread pool; the compiled kernel drops the GIL)."""

    def one(r: int) -> RunSummary:
        path = simulate(
            model,
            cfg.z0,
            cfg.stop,
            cfg.master_seed,
            replicate=r,
            thin=cfg.auto_thin,
            forced_indices=cfg.distance_checkpoints or None,
        )
        return _summarize(path, cfg, r)

    if jobs <= 1:
        summaries = [one(r) for r in range(cfg.replicates)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(one, range(cfg.replicates)))
    return EnsembleResult(config=cfg, model_name=model.name, summaries=summaries)


@dataclass
class ConvergenceTable:
    """Distance quantiles per checkpoint among runs surviving there."""

    checkpoints: tuple
    quantiles: np.ndarray  # (checkpoints, 3): 25/50/75%
    counts: np.ndarray
    improving_fraction: float  # runs whose final distance beats the first
    empty: bool


def convergence_statistics(
    result: EnsembleResult, attractor: AttractorSpec | None = None
) -> ConvergenceTable:
    """Quantiles of attractor distance at each checkpoint plus the final
    state, and the fraction of (surviving) runs that moved closer."""
    cfg = result.config
    if attractor is not None and cfg.attractor is not None and attractor is not cfg.attractor:
        raise ValueError("distances were recorded against a different attractor")
    if cfg.attractor is None and attractor is None:
        raise ValueError("no attractor to measure distances against")
    dmat = result.distance_matrix()
    labels = tuple(list(cfg.distance_checkpoints) + ["final"])
    qs = np.full((dmat.shape[1], 3), np.nan)
    counts = np.zeros(dmat.shape[1], dtype=np.int64)
    for j in range(dmat.shape[1]):
        col = dmat[:, j]
        col = col[~np.isnan(col)]
        counts[j] = len(col)
        if len(col):
            qs[j] = np.quantile(col, [0.25, 0.5, 0.75])
    both = ~np.isnan(dmat[:, 0]) & ~np.isnan(dmat[:, -1])
    improving = float(np.mean(dmat[both, -1] < dmat[both, 0])) if both.any() else float("nan")
    return ConvergenceTable(
        checkpoints=labels,
        quantiles=qs,
        counts=counts,
        improving_fraction=improving,
        empty=not counts.any(),
    )


def result_to_csv(result: EnsembleResult) -> str:
    """Serialize per-replicate rows plus #agg footer lines."""
    cfg = result.config
    out = io.StringIO()
    dist_cols = [f"dist_{c}" for c in cfg.distance_checkpoints] + ["dist_final"]
    cols = ["replicate", "outcome", "steps", "final_pop", "final_tau"]
    if cfg.attractor is not None:
        cols += dist_cols
    cols += ["s15", "s15_at90", "s20", "s20_at90"]
    out.write(",".join(cols) + "\n")
    for s in result.summaries:
        row = [str(s.replicate), s.outcome, str(s.steps), str(s.final_pop), repr(s.final_tau)]
        if cfg.attractor is not None:
            row += [repr(float(d)) for d in s.distances]
        row += [repr(s.s15_total), repr(s.s15_at90), repr(s.s20_total), repr(s.s20_at90)]
        out.write(",".join(row) + "\n")
    counts = result.outcome_counts
    frac, (lo, hi) = establishment_probability(result)
    out.write(f"#agg,replicates,{len(result.summaries)}\n")
    for o in OUTCOMES:
        out.write(f"#agg,{o},{counts[o]}\n")
    out.write(f"#agg,establishment_fraction,{frac!r}\n")
    out.write(f"#agg,wilson_low,{lo!r}\n")
    out.write(f"#agg,wilson_high,{hi!r}\n")
    return out.getvalue()
