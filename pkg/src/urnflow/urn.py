"""Generalized urn Markov chains on the nonnegative integer cone.

A model is a finite set of move vectors w (at most m individuals added or
removed per update) with frequency-dependent limiting probabilities p_w on
the simplex.  The exact finite-population kernel may deviate from p_w by
O(1/|z|); builder models carry that correction, custom rule sets are taken
verbatim.  The zero state is absorbing and maps to the null frequency 0.

Each update advances the event clock tau by 1/|z| (by 1 when extinct), and
the frequency path interpolates as a right-open step function in tau.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import backend
from ._pykernels import (
    MASS_TOL,
    GenericKernelSpec,
    entry_probs,
)
from .errors import HorizonError, KernelMassError, ModelSpecError, NegativeCountError
from .rng import make_generator


def alpha(move) -> int:
    """Net population change of a move: the sum of its entries."""
    return int(np.sum(np.asarray(move, dtype=np.int64)))


def move_size(move) -> int:
    """Number of individuals touched by a move: the L1 norm."""
    return int(np.abs(np.asarray(move, dtype=np.int64)).sum())


@dataclass(frozen=True)
class TransitionRule:
    """A move vector together with its limiting probability map on S_k."""

    move: np.ndarray
    limit_prob: Callable[[np.ndarray], float]
    label: str = ""

    def __post_init__(self):
        mv = np.ascontiguousarray(self.move, dtype=np.int64)
        mv.setflags(write=False)
        object.__setattr__(self, "move", mv)


@dataclass(frozen=True)
class StopCondition:
    """Simulation stop rule: any (default) or all of the given atoms.

    Atoms: step count reaching max_steps, population reaching
    max_population, event time reaching max_tau, extinction.
    """

    max_steps: int | None = None
    max_population: int | None = None
    max_tau: float | None = None
    on_extinction: bool = True
    mode: str = "any"

    def __post_init__(self):
        if self.mode not in ("any", "all"):
            raise ValueError(f"mode must be 'any' or 'all', got {self.mode!r}")
        if (
            self.max_steps is None
            and self.max_population is None
            and self.max_tau is None
            and not self.on_extinction
        ):
            raise ValueError("stop condition requires at least one atom")

    def backend_kwargs(self) -> dict:
        return {
            "n_max": -1 if self.max_steps is None else int(self.max_steps),
            "pop_max": -1 if self.max_population is None else int(self.max_population),
            "tau_max": -1.0 if self.max_tau is None else float(self.max_tau),
            "on_extinct": bool(self.on_extinction),
            "stop_all": self.mode == "all",
        }


class UrnModel:
    """A k-type urn process: rule set plus exact finite-population kernel.

    For models assembled from raw rules the kernel equals the limiting
    probabilities evaluated at z/|z|; builder models override the outcome
    enumeration with their 1/|z| corrections.  Instances are immutable
    after construction and safe to share across concurrent simulations.
    """

    def __init__(
        self,
        k: int,
        m: int,
        rules: Sequence[TransitionRule],
        *,
        a_bound: float | None = None,
        name: str = "custom",
    ):
        self.k = int(k)
        self.m = int(m)
        self.rules = tuple(rules)
        self.a_bound = a_bound
        self.name = name
        self._moves = np.array([r.move for r in self.rules], dtype=np.int64).reshape(
            len(self.rules), self.k
        )
        self._kernel_spec = None
        self._limit_spec = None

    # -- limiting transition functions ------------------------------------

    def limit_probs(self, x: np.ndarray) -> np.ndarray:
        """All rule probabilities p_w(x), in rule order."""
        if self._limit_spec is not None:
            probs = entry_probs(self._limit_spec, np.asarray(x, dtype=np.float64), 0.0)
            return np.append(probs, 1.0 - probs.sum())
        x = np.asarray(x, dtype=np.float64)
        return np.array([r.limit_prob(x) for r in self.rules], dtype=np.float64)

    @property
    def moves(self) -> np.ndarray:
        return self._moves

    # -- exact kernel ------------------------------------------------------

    def outcome_entries(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Moves and exact kernel probabilities at nonzero state z.

        The two arrays line up entrywise; probabilities account for all
        mass (an explicit null row carries any remainder for builder
        models).
        """
        z = np.asarray(z, dtype=np.int64)
        pop = int(z.sum())
        if pop == 0:
            raise ValueError("outcome enumeration requires a nonzero state")
        if self._kernel_spec is not None:
            probs = entry_probs(
                self._kernel_spec, z / pop, 1.0 / pop
            )
            null = 1.0 - probs.sum()
            if null < -MASS_TOL:
                raise KernelMassError(f"outcome mass exceeds 1 at state {z}")
            return self._kernel_spec.moves, np.append(probs, max(null, 0.0))
        return self._moves, self.limit_probs(z / pop)

    def kernel(self, z) -> dict[tuple, float]:
        """Exact kernel at z aggregated per distinct move."""
        moves, probs = self.outcome_entries(z)
        out: dict[tuple, float] = {}
        for mv, p in zip(moves, probs):
            key = tuple(int(v) for v in mv)
            out[key] = out.get(key, 0.0) + float(p)
        return out

    def conditional_mean_increment(self, z) -> np.ndarray:
        """Exact E[z(n+1) - z(n) | z(n) = z] by kernel enumeration."""
        z = np.asarray(z, dtype=np.int64)
        moves, probs = self.outcome_entries(z)
        return probs @ moves

    def sampler_spec(self):
        """Kernel spec consumed by the simulation backends (or None)."""
        return self._kernel_spec


def make_model(
    k: int,
    rules: Sequence[TransitionRule],
    *,
    m: int | None = None,
    a_bound: float | None = 0.0,
    name: str = "custom",
) -> UrnModel:
    """Assemble a model from raw rules (kernel taken as the limits)."""
    if m is None:
        m = max(move_size(r.move) for r in rules)
    return UrnModel(k, m, rules, a_bound=a_bound, name=name)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    """Structural check results over a sample of states."""

    samples: int
    norm_error: float  # max |sum of kernel mass - 1|
    empirical_a: float  # observed sup of |z| * max_w |p_w - kernel|
    max_move_size: int
    declared_m: int
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def kernel_limit_gap(model: UrnModel, z) -> float:
    """|z| * max over moves of |p_w(z/|z|) - kernel(z, z+w)|.

    For models whose null move carries the remainder mass, the null gap is
    computed as the negated sum of the other gaps (the exact value by mass
    conservation) rather than by differencing two near-1 remainders, which
    would inject |z|-scaled roundoff.
    """
    z = np.asarray(z, dtype=np.int64)
    pop = int(z.sum())
    if pop == 0:
        raise ValueError("gap requires a nonzero state")
    _, kernel = model.outcome_entries(z)
    limits = model.limit_probs(z / pop)
    if model._kernel_spec is not None:
        dev = limits[:-1] - kernel[:-1]
        worst = max(float(np.max(np.abs(dev))), abs(float(dev.sum())))
    else:
        worst = float(np.max(np.abs(limits - kernel)))
    return pop * worst


def validate_model(model: UrnModel, sample_states: Sequence) -> ValidationReport:
    """Check kernel normalization, move bounds, and the kernel/limit gap."""
    if not len(sample_states):
        raise ValueError("sample_states must be nonempty")
    norm_err = 0.0
    emp_a = 0.0
    violations: list[str] = []
    max_move = max(move_size(mv) for mv in model.moves)
    if max_move > model.m:
        violations.append(
            f"rule move size {max_move} exceeds declared bound m={model.m}"
        )
    for z in sample_states:
        z = np.asarray(z, dtype=np.int64)
        pop = int(z.sum())
        if pop == 0:
            raise ValueError("sample states must be nonzero")
        moves, probs = model.outcome_entries(z)
        total = float(probs.sum())
        norm_err = max(norm_err, abs(total - 1.0))
        if probs.min() < -MASS_TOL or probs.max() > 1.0 + MASS_TOL:
            violations.append(f"kernel probability outside [0, 1] at state {z}")
        limits = model.limit_probs(z / pop)
        if limits.shape != probs.shape:
            raise ModelSpecError("rule list and kernel enumeration disagree")
        emp_a = max(emp_a, kernel_limit_gap(model, z))
        bad = (probs > 0) & ((z[None, :] + moves) < 0).any(axis=1)
        if bad.any():
            violations.append(
                f"move {moves[np.argmax(bad)]} has positive mass but leaves "
                f"state {z} with a negative count"
            )
    if norm_err > MASS_TOL:
        violations.append(f"kernel mass error {norm_err} exceeds {MASS_TOL}")
    return ValidationReport(
        samples=len(sample_states),
        norm_error=norm_err,
        empirical_a=emp_a,
        max_move_size=max_move,
        declared_m=model.m,
        violations=violations,
    )


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


@dataclass
class PathRecord:
    """One realized trajectory at recorded update indices.

    Rows hold (n, tau, z) plus running sums of |z|^-1.5 and |z|^-2 over all
    updates up to n (extinct states excluded).  With thinning, rows are a
    subset of updates; the initial and final states are always present.
    """

    n: np.ndarray
    tau: np.ndarray
    z: np.ndarray
    s15: np.ndarray
    s20: np.ndarray
    stop_reason: str
    steps: int
    model_name: str = ""
    seed: int | None = None
    replicate: int = 0

    @property
    def k(self) -> int:
        return self.z.shape[1]

    @property
    def population(self) -> np.ndarray:
        return self.z.sum(axis=1)

    @property
    def frequencies(self) -> np.ndarray:
        """Row-wise z/|z|, with the null distribution 0 where extinct."""
        pop = self.population.astype(np.float64)
        safe = np.where(pop > 0, pop, 1.0)
        x = self.z / safe[:, None]
        x[pop == 0] = 0.0
        return x

    @property
    def final_z(self) -> np.ndarray:
        return self.z[-1]

    @property
    def final_tau(self) -> float:
        return float(self.tau[-1])

    def interpolate(self, t: float) -> np.ndarray:
        """Step-function value at event time t: x(n) for tau(n) <= t < tau(n+1).

        Exact for full-resolution paths; thinned paths interpolate at the
        recorded resolution.
        """
        if t < self.tau[0] - 1e-15 or t > self.tau[-1] + 1e-15:
            raise HorizonError(
                f"t={t} outside recorded event-time range "
                f"[{self.tau[0]}, {self.tau[-1]}]"
            )
        idx = int(np.searchsorted(self.tau, t, side="right")) - 1
        idx = max(idx, 0)
        return self.frequencies[idx]


def interpolate(path: PathRecord, t: float) -> np.ndarray:
    """Module-level alias of PathRecord.interpolate."""
    return path.interpolate(t)


def step(model: UrnModel, z, rng: np.random.Generator) -> np.ndarray:
    """One exact-kernel update from state z (absorbing at zero)."""
    z = np.asarray(z, dtype=np.int64)
    if int(z.sum()) == 0:
        return z.copy()
    moves, probs = model.outcome_entries(z)
    total = float(probs.sum())
    if total > 1.0 + MASS_TOL:
        raise KernelMassError(f"outcome mass {total} exceeds 1 at state {z}")
    if total < 1.0 - MASS_TOL:
        raise KernelMassError(
            f"kernel mass deficit {1.0 - total} at state {z}: ill-specified model"
        )
    cum = np.add.accumulate(probs)
    u = rng.random()
    idx = int(np.searchsorted(cum, u, side="right"))
    if idx >= len(probs):
        return z.copy()
    out = z + moves[idx]
    if out.min() < 0:
        raise NegativeCountError(
            f"move {moves[idx]} at state {z} leaves a negative count"
        )
    return out


def _generic_spec(model: UrnModel) -> GenericKernelSpec:
    moves = np.vstack([model._moves, np.zeros(model.k, dtype=np.int64)])

    def probs_fn(x, inv_n):
        return np.array([r.limit_prob(x) for r in model.rules], dtype=np.float64)

    return GenericKernelSpec(k=model.k, moves=moves, probs_fn=probs_fn)


def simulate(
    model: UrnModel,
    z0,
    stop: StopCondition,
    seed: int,
    *,
    replicate: int = 0,
    thin: int = 1,
    forced_indices=None,
    hard_cap: int | None = None,
    compiled: bool | None = None,
) -> PathRecord:
    """Simulate one path; a deterministic function of (model, z0, stop, seed,
    replicate) regardless of backend."""
    z0 = np.ascontiguousarray(z0, dtype=np.int64)
    if z0.shape != (model.k,):
        raise ValueError(f"z0 must have shape ({model.k},)")
    if z0.min() < 0:
        raise ValueError("initial counts must be nonnegative")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    gen = make_generator(seed, replicate)
    spec = model.sampler_spec()
    if spec is None:
        spec = _generic_spec(model)
        compiled = False
    forced = (
        np.unique(np.asarray(forced_indices, dtype=np.int64))
        if forced_indices is not None
        else None
    )
    res = backend.run_chain(
        spec,
        z0,
        gen,
        compiled=compiled,
        thin=thin,
        forced=forced,
        hard_cap=-1 if hard_cap is None else int(hard_cap),
        **stop.backend_kwargs(),
    )
    return PathRecord(
        n=res["n"],
        tau=res["tau"],
        z=res["z"],
        s15=res["s15"],
        s20=res["s20"],
        stop_reason=res["stop"],
        steps=res["steps"],
        model_name=model.name,
        seed=seed,
        replicate=replicate,
    )
