"""Equilibrium and attractor analysis of the mean-limit flows.

Covers boundary/interior equilibrium enumeration for replicator payoff
matrices, the weighted invasion-rate (permanence) check, the sign quantity
(b-d)/(b+d+nu) + x'Ax deciding average growth on the interior attractor,
sampled growth extrema, first-return periodic-orbit detection, and
averages of observables over a point or a detected orbit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import brentq

from .errors import FlowDomainError, UrnflowError
from .meanfield import MeanLimitSystem, flow
from ._pykernels import _rk4_step, field_drift

RESIDUAL_TOL = 1e-9
SUPPORT_TOL = 1e-10
COND_LIMIT = 1e12


@dataclass(frozen=True)
class Equilibrium:
    point: np.ndarray
    support: tuple[int, ...]  # indices with positive mass
    residual: float


@dataclass
class EquilibriumSet:
    """Equilibria found by support enumeration, plus skipped supports."""

    equilibria: list[Equilibrium]
    degenerate_supports: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def points(self) -> np.ndarray:
        return np.array([e.point for e in self.equilibria])

    def __len__(self) -> int:
        return len(self.equilibria)


@dataclass(frozen=True)
class AttractorSpec:
    """A target invariant set: a point, a sampled periodic orbit, or a
    sampled set."""

    kind: str  # point | periodic_orbit | sampled_set
    points: np.ndarray
    period: float | None = None

    def __post_init__(self):
        if self.kind not in ("point", "periodic_orbit", "sampled_set"):
            raise ValueError(f"unknown attractor kind {self.kind!r}")
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64)).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.kind == "periodic_orbit":
            if self.period is None or self.period <= 0:
                raise ValueError("periodic orbit requires a positive period")
            gap = float(np.linalg.norm(pts[-1] - pts[0]))
            # sampled orbits store the wrapped point last; enforce closure
            if gap > 1e-6:
                raise ValueError(f"orbit closure gap {gap} exceeds 1e-6")


def attractor_distance(x, spec: AttractorSpec) -> float:
    """Euclidean distance from x to the sampled attractor."""
    x = np.asarray(x, dtype=np.float64)
    d = np.linalg.norm(spec.points - x[None, :], axis=1)
    return float(d.min())


# ---------------------------------------------------------------------------
# equilibria of the replicator field x o (Ax - x'Ax)
# ---------------------------------------------------------------------------


def _solve_support(A: np.ndarray, support: tuple[int, ...]):
    """Equal-payoff point on a support: (Ax)_i = lam on it, sum x = 1."""
    s = len(support)
    M = np.zeros((s + 1, s + 1))
    rhs = np.zeros(s + 1)
    sub = A[np.ix_(support, support)]
    M[:s, :s] = sub
    M[:s, s] = -1.0
    M[s, :s] = 1.0
    rhs[s] = 1.0
    if np.linalg.cond(M) > COND_LIMIT:
        return None
    sol = np.linalg.solve(M, rhs)
    return sol[:s], sol[s]


def _field_residual(A: np.ndarray, x: np.ndarray) -> float:
    y = A @ x
    return float(np.linalg.norm(x * (y - x @ y)))


def boundary_equilibria(A: np.ndarray, tol: float = 1e-9) -> EquilibriumSet:
    """All rest points on proper supports, by support enumeration.

    Every proper nonempty support J solves the linear system
    {(Ax)_i = lam on J, x = 0 off J, sum x = 1}; solutions with
    coordinates >= -tol are clipped, renormalized, and kept when the full
    replicator-field residual is <= 1e-9.  Vertices always qualify.
    Ill-conditioned supports (condition number > 1e12, e.g. whole faces of
    equilibria) are reported as degenerate rather than solved.
    """
    A = np.asarray(A, dtype=np.float64)
    k = A.shape[0]
    if k > 10:
        raise ValueError("support enumeration limited to k <= 10")
    found: list[Equilibrium] = []
    degenerate: list[tuple[int, ...]] = []
    for size in range(1, k):
        for support in combinations(range(k), size):
            res = _solve_support(A, support)
            if res is None:
                degenerate.append(support)
                continue
            xs, _ = res
            if xs.min() < -tol:
                continue
            x = np.zeros(k)
            x[list(support)] = np.clip(xs, 0.0, None)
            total = x.sum()
            if total <= 0:
                continue
            x /= total
            resid = _field_residual(A, x)
            if resid > RESIDUAL_TOL:
                continue
            eff_support = tuple(i for i in range(k) if x[i] > SUPPORT_TOL)
            if any(np.linalg.norm(e.point - x) < 1e-7 for e in found):
                continue
            found.append(Equilibrium(point=x, support=eff_support, residual=resid))
    return EquilibriumSet(equilibria=found, degenerate_supports=degenerate)


def interior_equilibrium(A: np.ndarray) -> np.ndarray | None:
    """The strictly positive equal-payoff point, if one exists."""
    A = np.asarray(A, dtype=np.float64)
    k = A.shape[0]
    res = _solve_support(A, tuple(range(k)))
    if res is None:
        return None
    xs, _ = res
    if xs.min() <= 1e-9:
        return None
    x = xs / xs.sum()
    if _field_residual(A, x) > RESIDUAL_TOL:
        return None
    return x


@dataclass
class PermanenceReport:
    """Weighted invasion rates at boundary equilibria.

    For each equilibrium, the p-weighted sum of (Ax)_i - x'Ax over the
    coordinates absent at that equilibrium (within the face considered).
    The condition holds when the minimum is positive: some convex weight
    vector makes every boundary equilibrium invadable.
    """

    values: list[float]
    equilibria: EquilibriumSet
    min_value: float
    holds: bool
    vacuous: bool  # no boundary equilibria supplied: suspicious


def check_permanence(
    A: np.ndarray,
    p: np.ndarray,
    eqs: EquilibriumSet,
    face: tuple[int, ...] | None = None,
    tol: float = 0.0,
) -> PermanenceReport:
    A = np.asarray(A, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if p.min() <= 0:
        raise ValueError("weights p must be strictly positive")
    active = tuple(range(A.shape[0])) if face is None else tuple(face)
    values = []
    for eq in eqs.equilibria:
        x = eq.point
        payoff = A @ x
        mean = float(x @ payoff)
        invading = [i for i in active if x[i] <= SUPPORT_TOL]
        values.append(float(sum(p[i] * (payoff[i] - mean) for i in invading)))
    if not values:
        return PermanenceReport([], eqs, float("nan"), holds=True, vacuous=True)
    mn = min(values)
    return PermanenceReport(values, eqs, mn, holds=mn > tol, vacuous=False)


def growth_condition_value(params, face: tuple[int, ...] | None = None) -> float:
    """(b-d)/(b+d+nu) + x'Ax at the interior equal-payoff point of the face.

    The sign decides between growth-with-convergence toward the interior
    attractor and non-convergence (negative average growth there).
    """
    A = params.payoff
    if face is not None:
        A = A[np.ix_(face, face)]
    if not A.any():
        # degenerate neutral game: x'Ax = 0 everywhere on the face
        return params.gamma * (params.b - params.d)
    xhat = interior_equilibrium(A)
    if xhat is None:
        raise UrnflowError("no interior equilibrium on the requested face")
    return params.gamma * (params.b - params.d) + float(xhat @ A @ xhat)


def check_uniform_growth(system: MeanLimitSystem, region) -> tuple[float, float]:
    """(min, max) of the growth rate over sampled points of a region."""
    pts = np.atleast_2d(np.asarray(region, dtype=np.float64))
    if pts.shape[0] == 0:
        raise ValueError("region sample must be nonempty")
    vals = system.growth_values(pts)
    return float(vals.min()), float(vals.max())


# ---------------------------------------------------------------------------
# periodic orbits
# ---------------------------------------------------------------------------


def _drift_fn(system: MeanLimitSystem):
    if system.field is not None:
        fs = system.field
        return lambda x: field_drift(fs, x)
    return system.drift


def _advance(drift, x: np.ndarray, dt: float, h: float) -> np.ndarray:
    """Integrate forward by dt using steps of at most h (Python steps)."""
    x = np.array(x, dtype=np.float64)
    if dt <= 0:
        return x
    nsub = max(1, int(np.ceil(dt / h - 1e-12)))
    hs = dt / nsub
    for _ in range(nsub):
        x = _rk4_step(drift, x, hs)
    return x


def detect_periodic_orbit(
    system: MeanLimitSystem,
    x0,
    t_max: float = 4000.0,
    tol: float = 1e-6,
    n_samples: int = 256,
    min_diameter: float = 1e-3,
) -> AttractorSpec | None:
    """First-return detection of a stable periodic orbit.

    Integrates through a transient of t_max/2, then places a section
    through the trajectory point there, normal to the flow, and collects
    positive-direction returns over the remaining time (the section is
    re-seated once if fewer than three returns show up).  Accepts only if
    the last five return times agree to 1e-4 relative, the return points
    have stopped moving, the orbit has diameter >= min_diameter (an
    inward-spiraling transient fails these), and one full revolution
    closes to within ``tol``.  Returns the orbit sampled at n_samples
    equally spaced times, or None.  Raises FlowDomainError if the
    trajectory leaves the open simplex (a coordinate below 1e-12).
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.min() <= 0:
        raise ValueError("x0 must be interior")
    drift = _drift_fn(system)
    h = system.h

    crossings_t: np.ndarray = np.empty(0)
    nodes = None
    anchor = normal = None
    for attempt in range(2):
        t_settle = t_max / 2 if attempt == 0 else 3 * t_max / 4
        settle = flow(system, x0, t_settle, h=h, stride=max(1, int(round(t_settle / h)) // 64))
        anchor = settle.points[-1]
        normal = drift(anchor)
        speed = np.linalg.norm(normal)
        if speed < 1e-12:
            return None  # sitting at an equilibrium
        normal = normal / speed

        budget = t_max - t_settle
        sample = flow(system, anchor, budget, h=h)
        if sample.points.min() < 1e-12:
            raise FlowDomainError("trajectory left the simplex interior")
        s = (sample.points - anchor[None, :]) @ normal
        hits = np.nonzero((s[:-1] < 0.0) & (s[1:] >= 0.0))[0]
        if len(hits) >= 3:
            nodes = sample
            crossings_t = sample.times[hits]  # node just before each crossing
            cross_rows = hits
            break
    if nodes is None or len(crossings_t) < 3:
        return None

    # refine each crossing time within its step
    def refine(row):
        base = nodes.points[row]

        def sect(dt, _base=base):
            return float(normal @ (_advance(drift, _base, dt, h) - anchor))

        lo, hi = 0.0, nodes.times[row + 1] - nodes.times[row]
        if sect(lo) >= 0.0:
            return nodes.times[row], base
        dt = brentq(sect, lo, hi, xtol=1e-13)
        return nodes.times[row] + dt, _advance(drift, base, dt, h)

    tail_rows = cross_rows[-6:]
    refined = [refine(r) for r in tail_rows]
    times = np.array([r[0] for r in refined])
    pts = np.array([r[1] for r in refined])
    periods = np.diff(times)
    period = float(np.median(periods))
    if period <= 0 or (periods.max() - periods.min()) / period > 1e-4:
        return None
    spread = max(np.linalg.norm(a - b) for a in pts[-5:] for b in pts[-5:])
    if spread > 1e-5:
        return None  # returns still drifting: transient, not a cycle

    p0 = pts[-1]
    dt = period / n_samples
    orbit = np.empty((n_samples + 1, system.k), dtype=np.float64)
    x = p0.copy()
    orbit[0] = x
    for i in range(1, n_samples + 1):
        x = _advance(drift, x, dt, h)
        orbit[i] = x
    gap = float(np.linalg.norm(orbit[-1] - orbit[0]))
    if gap > tol:
        return None
    diam = float(
        max(np.linalg.norm(orbit[i] - orbit[0]) for i in range(0, n_samples, 8))
    )
    if diam < min_diameter:
        return None  # contracted loop around a focus
    return AttractorSpec(kind="periodic_orbit", points=orbit, period=period)


def orbit_average(quantity, spec: AttractorSpec):
    """Average of a state observable over a point or one orbit period.

    Orbit samples are equally spaced in time with the wrapped endpoint
    stored last, so the trapezoidal rule gives the endpoints half weight.
    Sampled sets carry no invariant measure and are rejected.
    """
    if spec.kind == "sampled_set":
        raise UrnflowError("sampled sets carry no invariant measure to average over")
    if spec.kind == "point":
        return quantity(spec.points[0])
    vals = np.array([quantity(p) for p in spec.points], dtype=np.float64)
    n = len(vals) - 1
    return (0.5 * vals[0] + vals[1:-1].sum(axis=0) + 0.5 * vals[-1]) / n
