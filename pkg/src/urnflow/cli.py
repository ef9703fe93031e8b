"""Command-line front end.

Subcommands: simulate, ode, ensemble, analyze (config-driven; JSON, one
experiment per file) and verify (the acceptance suite).  Flags carry run
identity (--seed, --jobs, --out, --thin); everything scientific lives in
the config file.  Exit codes: 0 success, 1 verification failure, 2 config
error, 3 runtime error.  URNFLOW_OUT sets the default output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import svg
from .analysis import (
    boundary_equilibria,
    check_permanence,
    detect_periodic_orbit,
    growth_condition_value,
    interior_equilibrium,
)
from .config import ExperimentConfig, load_config, stop_from
from .ensemble import EnsembleConfig, establishment_probability, result_to_csv, run_ensemble
from .errors import ConfigError, UrnflowError
from .meanfield import flow
from .urn import simulate


def _out_dir(cfg: ExperimentConfig | None, args) -> Path:
    if getattr(args, "out", None):
        base = args.out
    elif cfg is not None and cfg.output.get("dir"):
        base = cfg.output["dir"]
    else:
        base = os.environ.get("URNFLOW_OUT", ".")
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    model, system = cfg.build_model()
    run = cfg.run
    seed = args.seed if args.seed is not None else run["seed"]
    thin = args.thin if args.thin is not None else cfg.output["thin"]
    stop = stop_from(run["stop"], "run.stop")
    z0 = np.array(run["z0"], dtype=np.int64)
    path = simulate(model, z0, stop, seed, thin=thin)
    if int(z0.sum()) == 0:
        print("warning: starting state is extinct; path is a single row")

    out = _out_dir(cfg, args)
    k = model.k
    pops = path.population
    freqs = path.frequencies
    growth_col = None
    if system is not None:
        growth_col = system.growth_values(freqs)
    lines = [
        "n,tau,"
        + ",".join(f"z_{i + 1}" for i in range(k))
        + ","
        + ",".join(f"x_{i + 1}" for i in range(k))
        + ",pop"
        + (",growth" if growth_col is not None else "")
    ]
    for r in range(len(path.n)):
        row = [str(int(path.n[r])), _fmt(path.tau[r])]
        row += [str(int(v)) for v in path.z[r]]
        row += [_fmt(v) for v in freqs[r]]
        row.append(str(int(pops[r])))
        if growth_col is not None:
            row.append(_fmt(growth_col[r]))
        lines.append(",".join(row))
    lines.append(f"#meta,stop,{path.stop_reason}")
    lines.append(f"#meta,steps,{path.steps}")
    lines.append(f"#meta,seed,{seed}")
    _write(out / "path.csv", "\n".join(lines) + "\n")

    if "svg" in cfg.output["formats"]:
        charts = [
            svg.line_chart(
                [(f"x_{i + 1}", path.tau, freqs[:, i]) for i in range(k)],
                title=f"{model.name}: type frequencies",
                x_label="tau",
                y_label="frequency",
            ),
            svg.line_chart(
                [("|z|", path.tau, np.maximum(pops, 1))],
                title="population size",
                x_label="tau",
                y_label="|z|",
                log_y=True,
            ),
        ]
        if growth_col is not None:
            refs = ()
            if model.name == "replicator":
                try:
                    refs = (growth_condition_value(model.params),)
                except UrnflowError:
                    refs = ()
            charts.append(
                svg.line_chart(
                    [("growth", path.tau, growth_col)],
                    title="growth rate along the path",
                    x_label="tau",
                    y_label="f(x)",
                    ref_lines=refs,
                )
            )
        _write(out / "path.svg", svg.document(charts))
    return 0


def _analysis_rows(model, system, run) -> list[str]:
    rows = ["record,detail"]
    if model.name == "replicator":
        A = model.params.payoff
        eqs = boundary_equilibria(A)
        for eq in eqs.equilibria:
            pt = ";".join(_fmt(v) for v in eq.point)
            rows.append(
                f"equilibrium,support={'|'.join(str(i + 1) for i in eq.support)}"
                f";x={pt};residual={_fmt(eq.residual)}"
            )
        perm = check_permanence(A, np.ones(model.k), eqs)
        rows.append(f"permanence,min={_fmt(perm.min_value)};holds={perm.holds}")
        xhat = interior_equilibrium(A)
        if xhat is not None:
            rows.append(
                "interior,x=" + ";".join(_fmt(v) for v in xhat)
                + f";growth_condition={_fmt(growth_condition_value(model.params))}"
            )
    if run.get("detect_orbit"):
        x0 = run.get("x0", "center")
        if x0 == "center":
            x0 = np.full(model.k, 1.0 / model.k)
            if model.k >= 2:
                x0 = x0 + 1e-3 * (np.eye(model.k)[0] - np.eye(model.k)[1])
        orbit = detect_periodic_orbit(system, np.asarray(x0), t_max=float(run.get("T", 4000.0)))
        if orbit is None:
            rows.append("orbit,none")
        else:
            rows.append(f"orbit,period={_fmt(orbit.period)}")
    return rows


def cmd_ode(cfg: ExperimentConfig, args) -> int:
    model, system = cfg.build_model()
    if system is None:
        raise ConfigError("run.kind=ode requires a replicator or selection_mutation model")
    run = cfg.run
    x0 = run["x0"]
    x0 = np.full(model.k, 1.0 / model.k) if x0 == "center" else np.array(x0, dtype=np.float64)
    fs = flow(system, x0, run["T"], h=run["h"])
    growth_col = system.growth_values(fs.points)

    out = _out_dir(cfg, args)
    k = model.k
    lines = ["t," + ",".join(f"x_{i + 1}" for i in range(k)) + ",growth"]
    stride = max(1, cfg.output["thin"])
    idx = list(range(0, len(fs.times), stride))
    if idx[-1] != len(fs.times) - 1:
        idx.append(len(fs.times) - 1)
    for r in idx:
        lines.append(
            _fmt(fs.times[r]) + ","
            + ",".join(_fmt(v) for v in fs.points[r])
            + "," + _fmt(growth_col[r])
        )
    _write(out / "flow.csv", "\n".join(lines) + "\n")

    if run["analyze"] or run["detect_orbit"]:
        rows = _analysis_rows(model, system, run)
        orbit = None
        if run["detect_orbit"]:
            orbit = detect_periodic_orbit(system, x0 if x0.min() > 0 else np.full(k, 1.0 / k),
                                          t_max=float(run["T"]))
        _write(out / "analysis.csv", "\n".join(rows) + "\n")
        if orbit is not None:
            olines = [f"# period T={orbit.period!r}"]
            olines.append("idx," + ",".join(f"x_{i + 1}" for i in range(k)))
            for i, p in enumerate(orbit.points):
                olines.append(str(i) + "," + ",".join(_fmt(v) for v in p))
            _write(out / "orbit.csv", "\n".join(olines) + "\n")

    if "svg" in cfg.output["formats"]:
        charts = [
            svg.line_chart(
                [(f"x_{i + 1}", fs.times, fs.points[:, i]) for i in range(k)],
                title=f"{model.name}: mean-limit flow",
                x_label="t",
                y_label="x",
            ),
            svg.line_chart(
                [("growth", fs.times, growth_col)],
                title="growth rate along the flow",
                x_label="t",
                y_label="f(x)",
                ref_lines=(0.0,),
            ),
        ]
        _write(out / "flow.svg", svg.document(charts))
    return 0


def cmd_ensemble(cfg: ExperimentConfig, args) -> int:
    model, system = cfg.build_model()
    run = cfg.run
    seed = args.seed if args.seed is not None else run["master_seed"]
    stop = stop_from(run["stop"], "run.stop")
    attractor = None
    if run["attractor"] == "center":
        from .analysis import AttractorSpec

        attractor = AttractorSpec(kind="point", points=np.full(model.k, 1.0 / model.k))
    elif run["attractor"] == "orbit":
        if system is None:
            raise ConfigError("run.attractor=orbit requires a mean-limit system")
        x0 = np.full(model.k, 1.0 / model.k)
        if model.k >= 2:
            x0 = x0 + 0.02 * (np.eye(model.k)[0] - np.eye(model.k)[1])
        attractor = detect_periodic_orbit(system, x0, t_max=6000.0)
        if attractor is None:
            raise UrnflowError("no periodic orbit found for run.attractor=orbit")

    ecfg = EnsembleConfig(
        replicates=run["replicates"],
        master_seed=seed,
        z0=np.array(run["z0"], dtype=np.int64),
        stop=stop,
        survival_threshold=run["survival_threshold"],
        attractor=attractor,
        distance_checkpoints=tuple(run["checkpoints"]),
    )
    result = run_ensemble(model, ecfg, jobs=args.jobs)
    out = _out_dir(cfg, args)
    _write(out / "ensemble.csv", result_to_csv(result))
    frac, (lo, hi) = establishment_probability(result)
    print(f"establishment: {frac:.3f} [{lo:.3f}, {hi:.3f}]")
    return 0


def cmd_analyze(cfg: ExperimentConfig, args) -> int:
    model, system = cfg.build_model()
    if system is None:
        raise ConfigError("run.kind=analyze requires a replicator or selection_mutation model")
    rows = _analysis_rows(model, system, cfg.run)
    out = _out_dir(cfg, args)
    _write(out / "analysis.csv", "\n".join(rows) + "\n")
    return 0


def cmd_verify(args, criteria) -> int:
    from .acceptance import run_criteria

    results = run_criteria(criteria, jobs=args.jobs, tamper=args.tamper)
    width = max(len(r.name) for r in results)
    failed = [r for r in results if not r.passed]
    print()
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {mark}  {r.runtime:7.2f}s  {r.message}")
    print()
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        print("failed:", ", ".join(r.name for r in failed))
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="urnflow",
        description="Generalized urn population processes and their mean-limit dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("config", help="experiment JSON file")
        p.add_argument("--out", help="output directory (default: URNFLOW_OUT or '.')")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", "-j", type=int, default=1, help="worker threads")
        p.add_argument("--thin", type=int, default=None, help="record every n-th step")

    for name in ("simulate", "ode", "ensemble", "analyze"):
        add_common(sub.add_parser(name))
    pv = sub.add_parser("verify", help="run acceptance criteria")
    pv.add_argument("criteria", nargs="*", default=["all"],
                    help="criterion names or tags (default: all)")
    pv.add_argument("--out", help="output directory")
    pv.add_argument("--jobs", "-j", type=int, default=4)
    pv.add_argument(
        "--tamper",
        action="store_true",
        help="negative control: perturb the reference drift and confirm the suite fails",
    )

    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            crit = args.criteria if args.criteria else ["all"]
            return cmd_verify(args, crit)
        cfg = load_config(args.config)
        expected = {"simulate": "simulate", "ode": "ode", "ensemble": "ensemble",
                    "analyze": "analyze"}[args.command]
        if cfg.run_kind != expected:
            raise ConfigError(
                f"config run.kind is {cfg.run_kind!r} but the {args.command} "
                "command was invoked"
            )
        return {
            "simulate": cmd_simulate,
            "ode": cmd_ode,
            "ensemble": cmd_ensemble,
            "analyze": cmd_analyze,
        }[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UrnflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
