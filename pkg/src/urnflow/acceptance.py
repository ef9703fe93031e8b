"""Acceptance criteria: one callable per criterion, shared by the test
suite and the ``urnflow verify`` command.

Each criterion pins its tolerances here.  Statistical criteria run fixed
master seeds and additionally pin the realized numerics as regression
values (marked PIN_*): the qualitative claims (positive establishment,
non-convergence, error trends) are asserted from theory-side bounds, the
exact fractions are frozen after the first verified run and guard against
behavioral drift.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analysis import (
    AttractorSpec,
    attractor_distance,
    boundary_equilibria,
    check_permanence,
    detect_periodic_orbit,
    growth_condition_value,
    interior_equilibrium,
    orbit_average,
)
from .ensemble import (
    EnsembleConfig,
    establishment_probability,
    result_to_csv,
    run_ensemble,
    wilson_interval,
)
from .meanfield import derive_system, flow, time_average, tracking_error
from .models import (
    ReplicatorParams,
    SelectionMutationParams,
    build_replicator,
    build_selection_mutation,
    cyclic_mutation_example,
    hypercycle,
)
from .urn import StopCondition, kernel_limit_gap, simulate

# ---------------------------------------------------------------------------
# regression pins (recorded from the first verified run; deterministic seeds)
# ---------------------------------------------------------------------------

PIN_ESTABLISHMENT_FRACTION = 0.015  # 3 of 200, master seed 3
PIN_EXTINCTION_FRACTION_NEG = 1.0  # 200 of 200, master seed 3, d=4 variant
PIN_RESIDUAL_BOUND = 0.25  # sup of |z|*residual over the size grid
PIN_CYCLE_PERIOD = 397.656003  # cyclic-mutation fixture, h=0.01

AC8_SEED = 3
AC9_SEED = 3
AC10_SEED = 555
AC10_RUNS = 50


@dataclass
class CriterionResult:
    name: str
    passed: bool
    runtime: float
    message: str
    measured: dict = field(default_factory=dict)


class Context:
    """Lazily built shared artifacts (models, orbits, ensembles)."""

    def __init__(self, jobs: int = 4, tamper: bool = False):
        self.jobs = jobs
        self.tamper = tamper
        self._cache: dict = {}

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def ref_drift(self, system) -> Callable:
        """Closed-form drift used as the oracle reference; --tamper
        perturbs it so the suite must notice."""
        if not self.tamper:
            return system.drift
        bump = 1e-3

        def tampered(x, _d=system.drift, _b=bump):
            g = np.array(_d(x))
            g[0] += _b
            g[1] -= _b
            return g

        return tampered

    @property
    def hyper5(self):
        return self._get("hyper5", lambda: build_replicator(hypercycle(5)))

    @property
    def hyper5_neg(self):
        return self._get("hyper5_neg", lambda: build_replicator(hypercycle(5, d=4.0)))

    @property
    def orbit5(self) -> AttractorSpec:
        def build():
            _, system, _ = self.hyper5
            x0 = np.full(5, 0.2) + 0.02 * (np.eye(5)[0] - np.eye(5)[1])
            orb = detect_periodic_orbit(system, x0, t_max=6000.0)
            if orb is None:
                raise RuntimeError("failed to locate the interior attractor orbit")
            return orb

        return self._get("orbit5", build)

    @property
    def sm_fixture(self):
        def build():
            params = cyclic_mutation_example()
            model, system = build_selection_mutation(params)
            return params, model, system

        return self._get("sm_fixture", build)

    def ensemble_positive(self, jobs: int):
        def build():
            model, _, _ = self.hyper5
            cfg = EnsembleConfig(
                replicates=200,
                master_seed=AC8_SEED,
                z0=np.array([20] * 5),
                stop=StopCondition(max_population=10_000, max_steps=1_000_000),
                survival_threshold=10_000,
                attractor=self.orbit5,
                distance_checkpoints=(10_000, 50_000, 100_000, 200_000, 400_000),
            )
            return run_ensemble(model, cfg, jobs=jobs)

        return self._get(("ens_pos", jobs), build)

    def ensemble_negative(self, jobs: int):
        def build():
            model, _, _ = self.hyper5_neg
            cfg = EnsembleConfig(
                replicates=200,
                master_seed=AC9_SEED,
                z0=np.array([20] * 5),
                stop=StopCondition(max_population=10_000, max_steps=1_000_000),
                survival_threshold=10_000,
                attractor=self.orbit5,
                distance_checkpoints=(10_000, 50_000, 100_000, 200_000, 400_000),
            )
            return run_ensemble(model, cfg, jobs=jobs)

        return self._get(("ens_neg", jobs), build)

    def tracking_table(self, jobs: int) -> str:
        """CSV of early/late tracking errors over established runs."""

        def build():
            model, system, _ = self.hyper5
            stop = StopCondition(max_population=10_000, max_steps=3_000_000)
            scan_cfg = EnsembleConfig(
                replicates=160,
                master_seed=AC10_SEED,
                z0=np.array([100] * 5),
                stop=stop,
                survival_threshold=10_000,
            )
            scan = run_ensemble(model, scan_cfg, jobs=jobs)
            established = [
                s.replicate for s in scan.summaries if s.outcome == "established"
            ][:AC10_RUNS]
            if len(established) < AC10_RUNS:
                raise RuntimeError(
                    f"only {len(established)} established runs in the scan window"
                )

            def one(rep: int):
                path = simulate(
                    model, np.array([100] * 5), stop, AC10_SEED, replicate=rep, thin=1
                )
                t1 = (path.final_tau - 6.0) / 4.0
                early = tracking_error(path, system, t1, 5.0)
                late = tracking_error(path, system, 4.0 * t1, 5.0)
                return rep, path.final_tau, t1, early, late

            if jobs <= 1:
                rows = [one(r) for r in established]
            else:
                from concurrent.futures import ThreadPoolExecutor

                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    rows = list(pool.map(one, established))
            out = io.StringIO()
            out.write("replicate,final_tau,t1,err_early,err_late\n")
            for rep, ft, t1, e1, e2 in rows:
                out.write(f"{rep},{ft!r},{t1!r},{e1!r},{e2!r}\n")
            return out.getvalue()

        return self._get(("tracking", jobs), build)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def _random_replicator(rng, k: int) -> ReplicatorParams:
    B = rng.uniform(0.0, 0.6, (k, k))
    D = rng.uniform(0.0, 0.35, (k, k))
    scale = B + D
    over = scale > 1.0
    B[over] = B[over] / scale[over]
    D[over] = D[over] / scale[over]
    return ReplicatorParams(
        k=k, b=rng.uniform(0.5, 2.0), d=rng.uniform(0.5, 2.0), nu=rng.uniform(0.5, 5.0),
        B=B, D=D,
    )


def _random_selection_mutation(rng, k: int) -> SelectionMutationParams:
    F = rng.uniform(0.0, 3.0, (k, k))
    F = (F + F.T) / 2.0
    mu = rng.uniform(0.05, 0.5)
    Mu = np.zeros((k, k))
    if k > 1:
        for i in range(k):
            w = rng.uniform(0.1, 1.0, k - 1)
            w = mu * w / w.sum()
            Mu[i, [j for j in range(k) if j != i]] = w
    return SelectionMutationParams(
        k=k, d=rng.uniform(0.5, 2.0), nu=rng.uniform(0.5, 4.0), F=F, Mu=Mu
    )


def crit_drift_oracle_replicator(ctx: Context) -> CriterionResult:
    """Rule-summed drift equals 2 nu gamma x o ((B-D)x - x'(B-D)x)."""
    rng = np.random.default_rng(20240501)
    worst = 0.0
    for k in (2, 3, 5):
        params = _random_replicator(rng, k)
        model, system, _ = build_replicator(params)
        rule_sys = derive_system(model)
        ref = ctx.ref_drift(system)
        for _ in range(1000):
            x = rng.dirichlet(np.ones(k))
            worst = max(worst, float(np.max(np.abs(rule_sys.drift(x) - ref(x)))))
    return CriterionResult(
        name="drift-oracle-replicator",
        passed=worst < 1e-10,
        runtime=0.0,
        message=f"max |rule-sum - closed-form| = {worst:.3e} (< 1e-10)",
        measured={"max_error": worst},
    )


def crit_drift_oracle_selection_mutation(ctx: Context) -> CriterionResult:
    """Rule-summed drift equals gamma nu x o (Fx - x'Fx) + gamma (Mu'x - mu x)."""
    rng = np.random.default_rng(20240502)
    worst = 0.0
    for k in (2, 3, 5):
        params = _random_selection_mutation(rng, k)
        model, system = build_selection_mutation(params)
        rule_sys = derive_system(model)
        ref = ctx.ref_drift(system)
        for _ in range(1000):
            x = rng.dirichlet(np.ones(k))
            worst = max(worst, float(np.max(np.abs(rule_sys.drift(x) - ref(x)))))
    return CriterionResult(
        name="drift-oracle-selection-mutation",
        passed=worst < 1e-10,
        runtime=0.0,
        message=f"max |rule-sum - closed-form| = {worst:.3e} (< 1e-10)",
        measured={"max_error": worst},
    )


def crit_growth_value(ctx: Context) -> CriterionResult:
    """Growth rate at the hypercycle center equals 1/75 to 1e-12."""
    params = hypercycle(5)
    _, system, _ = ctx.hyper5
    xhat = np.full(5, 0.2)
    e1 = abs(system.growth(xhat) - 1.0 / 75.0)
    e2 = abs(growth_condition_value(params) - 1.0 / 75.0)
    ok = e1 <= 1e-12 and e2 <= 1e-12
    return CriterionResult(
        name="growth-value-hypercycle",
        passed=ok,
        runtime=0.0,
        message=f"|f(center)-1/75|={e1:.2e}, |condition-1/75|={e2:.2e} (<= 1e-12)",
        measured={"growth_error": e1, "condition_error": e2},
    )


def crit_ode_regime_split(ctx: Context) -> CriterionResult:
    """k=3 flows reach the center to 1e-6; k=5 flows stay > 0.05 away."""
    rng = np.random.default_rng(20240504)
    _, s3, _ = build_replicator(hypercycle(3))
    worst3 = 0.0
    for _ in range(10):
        x0 = rng.dirichlet(np.ones(3))
        fs = flow(s3, x0, 500.0)
        worst3 = max(worst3, float(np.linalg.norm(fs.points[-1] - 1.0 / 3.0)))
    _, s5, _ = ctx.hyper5
    xhat = np.full(5, 0.2)
    min5 = np.inf
    for _ in range(10):
        x0 = rng.dirichlet(np.ones(5))
        if np.linalg.norm(x0 - xhat) < 1e-3:
            continue
        fs = flow(s5, x0, 2000.0)
        sel = fs.times >= 1000.0
        d = np.linalg.norm(fs.points[sel] - xhat, axis=1)
        min5 = min(min5, float(d.min()))
    ok = worst3 < 1e-6 and min5 > 0.05
    return CriterionResult(
        name="ode-regime-split",
        passed=ok,
        runtime=0.0,
        message=f"k=3 max final gap {worst3:.2e} (<1e-6); "
        f"k=5 min distance {min5:.3f} (>0.05)",
        measured={"k3_gap": worst3, "k5_min_distance": min5},
    )


def crit_orbit_time_averages(ctx: Context) -> CriterionResult:
    """Flow time averages on [1000, 5000]: coordinates, x'Ax, growth.

    Averaged over the largest whole number of orbit periods inside the
    window (the 0.6-period remainder of the raw window biases coordinate
    averages ~1.4e-3, above tolerance, for every initial condition).
    """
    model, system, A = ctx.hyper5
    period = ctx.orbit5.period
    rng = np.random.default_rng(20240505)
    x0 = rng.dirichlet(np.ones(5))
    fs = flow(system, x0, 5000.0)
    n_per = int((5000.0 - 1000.0) / period)
    t_end = 1000.0 + n_per * period
    lo = int(np.searchsorted(fs.times, 1000.0 - 1e-9))
    hi = int(np.searchsorted(fs.times, t_end + 1e-9))
    t, X = fs.times[lo:hi], fs.points[lo:hi]
    span = t[-1] - t[0]
    avg_x = np.trapezoid(X, t, axis=0) / span
    avg_q = float(np.trapezoid(np.einsum("mi,ij,mj->m", X, A, X), t) / span)
    avg_f = float(np.trapezoid(system.growth_values(X), t) / span)
    e_coord = float(np.max(np.abs(avg_x - 0.2)))
    e_q = abs(avg_q - 16.0 / 75.0)
    e_f = abs(avg_f - 1.0 / 75.0)
    ok = e_coord <= 1e-3 and e_q <= 1e-3 and e_f <= 1e-3
    return CriterionResult(
        name="orbit-time-averages",
        passed=ok,
        runtime=0.0,
        message=f"coord err {e_coord:.2e}, x'Ax err {e_q:.2e}, growth err {e_f:.2e} "
        f"(<= 1e-3, {n_per} periods)",
        measured={"coord": e_coord, "quadratic": e_q, "growth": e_f},
    )


def crit_kernel_limit_gap(ctx: Context) -> CriterionResult:
    """|z| * max_w |p_w - kernel| bounded by the analytic correction
    constant (+1e-12) over 200 states per builder, |z| in [10, 1e4]."""
    rng = np.random.default_rng(20240506)
    B = rng.uniform(0.1, 0.5, (4, 4))
    D = rng.uniform(0.0, 0.4, (4, 4))
    np.fill_diagonal(D, 0.0)
    B = np.minimum(B, 1.0 - D)
    rep_params = ReplicatorParams(k=4, b=1.0, d=0.8, nu=3.0, B=B, D=D)
    rep_model, _, _ = build_replicator(rep_params)
    a_rep = rep_params.gamma * rep_params.nu * float(np.max(np.diag(B) ** 2))

    _, sm_model, _ = ctx.sm_fixture
    hyp_model, _, _ = ctx.hyper5

    def sweep(model, k):
        sup = 0.0
        for _ in range(200):
            n = int(np.exp(rng.uniform(np.log(10), np.log(10_000))))
            z = np.maximum(np.round(rng.dirichlet(np.ones(k)) * n), 0).astype(np.int64)
            if z.sum() == 0:
                continue
            sup = max(sup, kernel_limit_gap(model, z))
        for i in range(k):  # pure states attain the bound
            z = np.zeros(k, dtype=np.int64)
            z[i] = 10_000
            sup = max(sup, kernel_limit_gap(model, z))
        return sup

    sup_rep = sweep(rep_model, 4)
    sup_sm = sweep(sm_model, 3)
    sup_hyp = sweep(hyp_model, 5)
    ok = (
        sup_rep <= a_rep + 1e-12
        and sup_sm <= sm_model.a_bound + 1e-12
        and sup_hyp <= hyp_model.a_bound + 1e-12  # = 0: kernel exact
    )
    return CriterionResult(
        name="kernel-limit-gap-bound",
        passed=ok,
        runtime=0.0,
        message=f"replicator {sup_rep:.6f} <= {a_rep:.6f}; "
        f"fusion {sup_sm:.6f} <= {sm_model.a_bound:.6f}; hypercycle {sup_hyp:.1e} <= 0",
        measured={"replicator": sup_rep, "selection_mutation": sup_sm,
                  "hypercycle": sup_hyp},
    )


def crit_mean_drift_residual(ctx: Context) -> CriterionResult:
    """|z| * drift residual bounded by one constant across |z| grid."""
    from .meanfield import mean_drift_residual

    model, system, _ = ctx.hyper5
    rng = np.random.default_rng(20240507)
    worst = 0.0
    by_size = {}
    for n in (100, 1_000, 10_000):
        w = 0.0
        for _ in range(50):
            z = np.maximum(np.round(rng.dirichlet(np.ones(5)) * n), 0).astype(np.int64)
            if z.sum() == 0:
                continue
            w = max(w, z.sum() * mean_drift_residual(model, z, system))
        by_size[n] = w
        worst = max(worst, w)
    ok = worst <= PIN_RESIDUAL_BOUND
    return CriterionResult(
        name="mean-drift-residual",
        passed=ok,
        runtime=0.0,
        message=f"max |z|*residual = {worst:.4f} by size {by_size} "
        f"(<= pinned {PIN_RESIDUAL_BOUND})",
        measured={"worst": worst, **{f"n{k}": v for k, v in by_size.items()}},
    )


def crit_establishment_positive(ctx: Context) -> CriterionResult:
    """Positive-growth regime: establishment occurs and established runs
    approach the attractor (fraction pinned)."""
    res = ctx.ensemble_positive(ctx.jobs)
    frac, (lo, hi) = establishment_probability(res)
    est = [s for s in res.summaries if s.outcome == "established"]
    dmat = np.array([s.distances for s in est]) if est else np.empty((0, 1))
    med_first = float(np.median(dmat[:, 0])) if len(est) else float("nan")
    med_final = float(np.median(dmat[:, -1])) if len(est) else float("nan")
    ok = lo > 0.0 and len(est) > 0 and med_final < med_first
    ok = ok and abs(frac - PIN_ESTABLISHMENT_FRACTION) < 1e-12
    return CriterionResult(
        name="establishment-positive-growth",
        passed=ok,
        runtime=0.0,
        message=f"fraction {frac:.3f} [{lo:.4f}, {hi:.4f}] (pin "
        f"{PIN_ESTABLISHMENT_FRACTION}); median distance {med_first:.3f} -> "
        f"{med_final:.3f}",
        measured={"fraction": frac, "wilson_low": lo, "median_first": med_first,
                  "median_final": med_final},
    )


def crit_non_convergence_negative(ctx: Context) -> CriterionResult:
    """Negative-growth regime (condition value -7/45): extinction dominates
    and no run settles near the attractor."""
    cond = growth_condition_value(hypercycle(5, d=4.0))
    res = ctx.ensemble_negative(ctx.jobs)
    counts = res.outcome_counts
    ext_lo, _ = wilson_interval(counts["extinct"], len(res.summaries))
    est = [s for s in res.summaries if s.outcome == "established"]
    if est:
        near = sum(1 for s in est if s.distances[-1] <= 0.05)
        _, near_hi = wilson_interval(near, len(est))
        near_ok = near_hi < 0.05
        near_msg = f"{near}/{len(est)} near attractor (wilson high {near_hi:.3f})"
    else:
        near_ok = True
        near_msg = "no run reached the threshold (condition vacuous)"
    ext_frac = counts["extinct"] / len(res.summaries)
    ok = (
        abs(cond - (-7.0 / 45.0)) <= 1e-12
        and ext_lo > 0.9
        and near_ok
        and abs(ext_frac - PIN_EXTINCTION_FRACTION_NEG) < 1e-12
    )
    return CriterionResult(
        name="non-convergence-negative-growth",
        passed=ok,
        runtime=0.0,
        message=f"condition {cond:.6f}; extinct {counts['extinct']}/200 "
        f"(wilson low {ext_lo:.3f} > 0.9); {near_msg}",
        measured={"condition": cond, "extinct_fraction": ext_frac,
                  "extinct_wilson_low": ext_lo},
    )


def crit_tracking_trend(ctx: Context) -> CriterionResult:
    """Tracking error against the mean flow shrinks as populations grow:
    late-window error below early-window error in >= 80% of 50 runs."""
    table = ctx.tracking_table(ctx.jobs)
    rows = [line.split(",") for line in table.strip().splitlines()[1:]]
    early = np.array([float(r[3]) for r in rows])
    late = np.array([float(r[4]) for r in rows])
    frac = float(np.mean(late < early))
    ok = len(rows) == AC10_RUNS and frac >= 0.8
    return CriterionResult(
        name="tracking-error-trend",
        passed=ok,
        runtime=0.0,
        message=f"error decreased in {frac:.0%} of {len(rows)} runs (>= 80%); "
        f"median early {np.median(early):.4f} late {np.median(late):.4f}",
        measured={"decreasing_fraction": frac},
    )


def crit_permanence_witness(ctx: Context) -> CriterionResult:
    """Uniform weights certify invadability of all five vertices at 16/15."""
    _, _, A = ctx.hyper5
    eqs = boundary_equilibria(A)
    rep = check_permanence(A, np.ones(5), eqs)
    err = abs(rep.min_value - 16.0 / 15.0)
    ok = len(eqs) == 5 and rep.holds and err <= 1e-10
    return CriterionResult(
        name="permanence-witness",
        passed=ok,
        runtime=0.0,
        message=f"{len(eqs)} boundary equilibria; min invasion value "
        f"{rep.min_value:.12f} (|.-16/15|={err:.2e})",
        measured={"min_value": rep.min_value, "error": err},
    )


def crit_limit_cycle(ctx: Context) -> CriterionResult:
    """Cyclic-mutation fixture has a stable periodic orbit; averages and
    the fusion-rate criterion are consistent along it."""
    params, model, system = ctx.sm_fixture
    x0 = np.array([1 / 3 + 1e-3, 1 / 3 - 1e-3, 1 / 3])
    orbit = detect_periodic_orbit(system, x0, t_max=6000.0)
    if orbit is None:
        return CriterionResult(
            name="limit-cycle-detection", passed=False, runtime=0.0,
            message="no periodic orbit found",
        )
    closure = float(np.linalg.norm(orbit.points[-1] - orbit.points[0]))
    restart = detect_periodic_orbit(
        system, np.ascontiguousarray(orbit.points[17]), t_max=6000.0
    )
    rel = abs(restart.period - orbit.period) / orbit.period if restart else np.inf
    drift_avg = float(np.max(np.abs(orbit_average(system.drift, orbit))))
    fusion_rate = float(
        orbit_average(lambda x: params.nu * float(x @ params.F @ x), orbit)
    )
    growth_avg = float(orbit_average(system.growth, orbit))
    sign_ok = np.sign(fusion_rate - params.d) == np.sign(growth_avg)
    pin_ok = abs(orbit.period - PIN_CYCLE_PERIOD) / PIN_CYCLE_PERIOD < 1e-3
    ok = (
        closure < 1e-6
        and rel < 1e-4
        and drift_avg < 1e-4
        and sign_ok
        and pin_ok
    )
    return CriterionResult(
        name="limit-cycle-detection",
        passed=ok,
        runtime=0.0,
        message=f"period {orbit.period:.4f} (pin {PIN_CYCLE_PERIOD}), closure "
        f"{closure:.1e}, restart rel {rel:.1e}, |avg drift| {drift_avg:.1e}, "
        f"fusion rate {fusion_rate:.4f} vs d={params.d} consistent with growth "
        f"{growth_avg:+.4f}",
        measured={"period": orbit.period, "closure": closure,
                  "restart_rel": rel, "drift_avg": drift_avg},
    )


def crit_parallel_determinism(ctx: Context) -> CriterionResult:
    """The statistical criteria's CSVs are byte-identical for 1 and 4
    workers."""
    same_pos = ctx.ensemble_positive(1) is not None and (
        result_to_csv(ctx.ensemble_positive(1)) == result_to_csv(ctx.ensemble_positive(4))
    )
    same_neg = result_to_csv(ctx.ensemble_negative(1)) == result_to_csv(
        ctx.ensemble_negative(4)
    )
    same_trk = ctx.tracking_table(1) == ctx.tracking_table(4)
    ok = same_pos and same_neg and same_trk
    return CriterionResult(
        name="parallel-determinism",
        passed=ok,
        runtime=0.0,
        message=f"ensembles identical across worker counts: positive={same_pos}, "
        f"negative={same_neg}, tracking={same_trk}",
        measured={},
    )


CRITERIA: list[tuple[str, tuple[str, ...], Callable[[Context], CriterionResult]]] = [
    ("drift-oracle-replicator", ("drift-oracles",), crit_drift_oracle_replicator),
    ("drift-oracle-selection-mutation", ("drift-oracles",), crit_drift_oracle_selection_mutation),
    ("growth-value-hypercycle", ("growth",), crit_growth_value),
    ("ode-regime-split", ("ode",), crit_ode_regime_split),
    ("orbit-time-averages", ("ode",), crit_orbit_time_averages),
    ("kernel-limit-gap-bound", ("kernel",), crit_kernel_limit_gap),
    ("mean-drift-residual", ("kernel",), crit_mean_drift_residual),
    ("establishment-positive-growth", ("ensemble",), crit_establishment_positive),
    ("non-convergence-negative-growth", ("ensemble",), crit_non_convergence_negative),
    ("tracking-error-trend", ("tracking",), crit_tracking_trend),
    ("permanence-witness", ("growth",), crit_permanence_witness),
    ("limit-cycle-detection", ("cycle",), crit_limit_cycle),
    ("parallel-determinism", ("ensemble",), crit_parallel_determinism),
]

NAMES = [name for name, _, _ in CRITERIA]


def run_criteria(
    selection: list[str] | str = "all", jobs: int = 4, tamper: bool = False
) -> list[CriterionResult]:
    """Run the selected criteria (names or tags) and return their results."""
    if isinstance(selection, str):
        selection = [selection]
    if selection in (["all"], []):
        chosen = CRITERIA
    else:
        chosen = [
            (n, tags, fn)
            for n, tags, fn in CRITERIA
            if n in selection or any(t in selection for t in tags)
        ]
        unknown = [
            s for s in selection
            if s != "all" and s not in NAMES
            and all(s not in tags for _, tags, _ in CRITERIA)
        ]
        if unknown:
            raise ValueError(f"unknown criteria {unknown}; available: {NAMES}")
    ctx = Context(jobs=jobs, tamper=tamper)
    results = []
    for name, _, fn in chosen:
        t0 = time.perf_counter()
        try:
            res = fn(ctx)
        except Exception as exc:  # a crash is a failure, not an abort
            res = CriterionResult(
                name=name, passed=False, runtime=0.0,
                message=f"error: {type(exc).__name__}: {exc}",
            )
        res.runtime = time.perf_counter() - t0
        results.append(res)
    return results
