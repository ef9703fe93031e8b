"""Mean-limit dynamics of an urn process on the simplex.

From a rule set, the limiting drift and population growth rate are

    g(x) = sum_w p_w(x) (w - x * alpha(w)),      f(x) = sum_w p_w(x) alpha(w),

so dx/dt = g(x) is the flow the frequency path shadows as the population
grows, and f is the limiting expected per-update change of |z|.  The module
also provides fixed-step integration (with simplex renormalization),
windowed time averages of f (the sign of the long-run average decides
between growth-and-convergence and non-convergence near an attractor), and
a tracking-error diagnostic comparing a realized path against the flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import backend
from ._pykernels import FusionField, ReplicatorField, field_drift, field_growth
from .errors import HorizonError
from .urn import PathRecord, TransitionRule, UrnModel


@dataclass
class MeanLimitSystem:
    """Drift g and growth f with the integrator configuration.

    ``field`` is an optional closed-form spec the compiled integrator
    understands; generic systems integrate through the Python backend.
    """

    k: int
    drift: Callable[[np.ndarray], np.ndarray]
    growth: Callable[[np.ndarray], float]
    h: float = 1e-2
    field: ReplicatorField | FusionField | None = None
    label: str = ""

    def growth_values(self, pts: np.ndarray) -> np.ndarray:
        """Growth rate at a batch of points."""
        pts = np.asarray(pts, dtype=np.float64)
        if self.field is not None:
            return np.atleast_1d(field_growth(self.field, pts))
        return np.array([self.growth(p) for p in np.atleast_2d(pts)])


@dataclass
class FlowSample:
    """Solution nodes of the mean-limit ODE, renormalized onto S_k."""

    times: np.ndarray
    points: np.ndarray

    def at(self, t: float) -> np.ndarray:
        idx = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        return self.points[max(idx, 0)]


def derive_system(source, h: float = 1e-2, label: str = "") -> MeanLimitSystem:
    """Mean-limit system by direct summation over a rule set.

    ``source`` is an UrnModel (fast bulk evaluation) or a rule sequence.
    This is the defining-sum route; builders return closed forms that are
    cross-checked against it in the tests.
    """
    if isinstance(source, UrnModel):
        k = source.k
        moves = source.moves.astype(np.float64)
        alphas = moves.sum(axis=1)
        bulk = source.limit_probs
    else:
        rules: Sequence[TransitionRule] = list(source)
        k = rules[0].move.shape[0]
        moves = np.array([r.move for r in rules], dtype=np.float64)
        alphas = moves.sum(axis=1)

        def bulk(x, _rules=tuple(rules)):
            return np.array([r.limit_prob(x) for r in _rules], dtype=np.float64)

    def drift(x):
        x = np.asarray(x, dtype=np.float64)
        p = bulk(x)
        return p @ moves - (p @ alphas) * x

    def growth(x):
        return float(bulk(np.asarray(x, dtype=np.float64)) @ alphas)

    return MeanLimitSystem(k=k, drift=drift, growth=growth, h=h, label=label)


def flow(
    system: MeanLimitSystem,
    x0,
    T: float,
    h: float | None = None,
    stride: int = 1,
    compiled: bool | None = None,
) -> FlowSample:
    """Integrate dx/dt = g(x) over [0, T] with fixed step h.

    Classical 4th-order steps; after each step coordinates in [-1e-12, 0)
    are clipped to 0 and the point is renormalized.  Coordinates below
    -1e-12 or non-finite values raise FlowDomainError.
    """
    h = system.h if h is None else float(h)
    if T <= 0 or h <= 0:
        raise ValueError("T and h must be positive")
    n_steps = int(round(T / h))
    if n_steps < 1:
        raise ValueError("T shorter than one step")
    fs = system.field if system.field is not None else system.drift
    times, pts = backend.rk4_path(fs, x0, h, n_steps, stride, compiled=compiled)
    return FlowSample(times=times, points=pts)


def time_average(
    system: MeanLimitSystem,
    x0,
    T: float,
    burn_in: float = 0.0,
    quantity: Callable[[np.ndarray], float | np.ndarray] | None = None,
    h: float | None = None,
    sample: FlowSample | None = None,
):
    """Trapezoidal time average of a quantity along the flow over [burn_in, T].

    With quantity None, averages the growth rate f (the windowed surrogate
    for its asymptotic average; callers should confirm stabilization across
    horizons).  Vector-valued quantities average componentwise.
    """
    if burn_in < 0 or T <= burn_in:
        raise ValueError("need T > burn_in >= 0")
    fs = sample if sample is not None else flow(system, x0, T, h=h)
    lo = int(np.searchsorted(fs.times, burn_in - 1e-12, side="left"))
    times = fs.times[lo:]
    pts = fs.points[lo:]
    if len(times) < 2:
        raise ValueError("averaging window contains fewer than two nodes")
    if quantity is None:
        vals = system.growth_values(pts)
    else:
        vals = np.array([quantity(p) for p in pts])
    avg = np.trapezoid(vals, times, axis=0) / (times[-1] - times[0])
    return float(avg) if np.ndim(avg) == 0 else avg


def time_average_growth(
    system: MeanLimitSystem, x0, T: float, burn_in: float = 0.0, h: float | None = None
) -> float:
    """Windowed time average of the growth rate along the flow."""
    return time_average(system, x0, T, burn_in=burn_in, h=h)


def tracking_error(
    path: PathRecord,
    system: MeanLimitSystem,
    t: float,
    window: float,
    h: float | None = None,
) -> float:
    """Sup distance between the interpolated path and the flow started on it.

    Evaluates sup over s in [0, window] of ||Phi_s(X(t)) - X(t+s)|| on a
    grid holding every path update time in the window plus the integrator
    nodes (the step function only moves at update times, so the grid
    captures the sup).  Requires the path to cover [t, t+window].
    """
    h = system.h if h is None else float(h)
    tau = path.tau
    if t < tau[0] - 1e-12 or t + window > tau[-1] + 1e-12:
        raise HorizonError(
            f"window [{t}, {t + window}] outside recorded range "
            f"[{tau[0]}, {tau[-1]}]"
        )
    freqs = path.frequencies
    start = path.interpolate(t)

    jump_rows = np.nonzero((tau > t) & (tau <= t + window))[0]
    node_offsets = np.arange(1, int(np.ceil(window / h)) + 1, dtype=np.float64) * h
    node_offsets = node_offsets[node_offsets <= window + 1e-12]
    offs = [np.array([0.0]), tau[jump_rows] - t, node_offsets, np.array([window])]
    rows = [
        np.array([int(np.searchsorted(tau, t, side="right")) - 1]),
        jump_rows,
        np.searchsorted(tau, t + node_offsets, side="right") - 1,
        np.array([int(np.searchsorted(tau, t + window, side="right")) - 1]),
    ]
    offsets = np.concatenate(offs)
    rows = np.concatenate(rows)
    order = np.argsort(offsets, kind="stable")
    offsets = np.maximum(offsets[order], 0.0)
    rows = np.clip(rows[order], 0, len(tau) - 1)

    fs = system.field if system.field is not None else system.drift
    flow_pts = backend.flow_at_times(fs, start, offsets, h)
    gaps = flow_pts - freqs[rows]
    return float(np.sqrt((gaps * gaps).sum(axis=1)).max())


def mean_drift_residual(model: UrnModel, z, system: MeanLimitSystem) -> float:
    """Distance between the scaled exact one-step frequency drift and g.

    Returns || |z| * E[x(n+1) - x(n) | z] - g(z/|z|) ||; the conditional
    expectation is exact kernel enumeration with the frequency of a
    post-move extinct state taken as the null distribution.  Bounded by
    K/|z| for models satisfying the 1/|z| kernel approximation.
    """
    z = np.asarray(z, dtype=np.int64)
    pop = int(z.sum())
    if pop == 0:
        raise ValueError("residual requires a nonzero state")
    moves, probs = model.outcome_entries(z)
    x = z / pop
    nxt = z[None, :] + moves
    pops = nxt.sum(axis=1).astype(np.float64)
    safe = np.where(pops > 0, pops, 1.0)
    xnxt = nxt / safe[:, None]
    xnxt[pops == 0] = 0.0
    mean_dx = probs @ (xnxt - x[None, :])
    resid = pop * mean_dx - system.drift(x)
    return float(np.linalg.norm(resid))
