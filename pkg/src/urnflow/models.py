"""Builders for the two application processes and small test models.

The interaction (replicator-type) process: individuals play one of k
strategies, give birth at rate b, die at rate d, and initiate pairwise
encounters at rate nu; an encounter of i with j makes i give birth with
probability B[i,j], die with probability D[i,j], and leaves it unaffected
otherwise.  The embedded jump chain includes encounters that affect
nobody, so the rule set carries an explicit null move and sums to one.

The fusion (selection-mutation) process: gametes with k alleles die at
rate d, mutate i->j at rate Mu[i,j], and fuse at rate nu; a fusion of
types i and j adds N gametes of type i and N of type j, where N has mean
F[i,j]/2.  Same-type pair events in both processes use the corrected
finite-population probability x_i (x_i |z| - 1)/|z| so partners are
distinct individuals; the freed mass lands on the null move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from ._pykernels import (
    FusionField,
    FusionKernelSpec,
    InteractionKernelSpec,
    ReplicatorField,
    entry_probs,
)
from .errors import ModelSpecError
from .meanfield import MeanLimitSystem
from .urn import TransitionRule, UrnModel, make_model


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=dtype).copy()
    out.setflags(write=False)
    return out


def _move_label(mv: np.ndarray) -> str:
    parts = [
        f"{'+' if v > 0 else '-'}{abs(v)}e{i + 1}" for i, v in enumerate(mv) if v != 0
    ]
    return " ".join(parts) if parts else "null"


# ---------------------------------------------------------------------------
# replicator-type interaction process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicatorParams:
    """Strategy count, baseline rates, and encounter outcome matrices."""

    k: int
    b: float
    d: float
    nu: float
    B: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        if self.k < 2:
            raise ModelSpecError("interaction process needs k >= 2")
        if self.b <= 0 or self.d <= 0 or self.nu < 0:
            raise ModelSpecError("rates must satisfy b > 0, d > 0, nu >= 0")
        B = _frozen(self.B)
        D = _frozen(self.D)
        if B.shape != (self.k, self.k) or D.shape != (self.k, self.k):
            raise ModelSpecError(f"B and D must be {self.k}x{self.k}")
        if B.min() < 0 or D.min() < 0 or (B + D).max() > 1 + 1e-12:
            raise ModelSpecError("need 0 <= B, D and B + D <= 1 entrywise")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "D", D)

    @property
    def gamma(self) -> float:
        return 1.0 / (self.b + self.d + self.nu)

    @property
    def payoff(self) -> np.ndarray:
        """Payoff matrix of the limiting replicator flow: 2 nu gamma (B - D)."""
        return (2.0 * self.nu * self.gamma) * (self.B - self.D)

    @property
    def unaffected(self) -> np.ndarray:
        return 1.0 - self.B - self.D


def hypercycle(k: int, b: float = 1.0, d: float = 2.5, nu: float = 4.0) -> ReplicatorParams:
    """Cyclic catalysis: strategy i's births are catalyzed by strategy i-1."""
    if k < 2:
        raise ModelSpecError("hypercycle needs k >= 2")
    B = np.zeros((k, k))
    for i in range(k):
        B[i, (i - 1) % k] = 1.0
    return ReplicatorParams(k=k, b=b, d=d, nu=nu, B=B, D=np.zeros((k, k)))


class ReplicatorModel(UrnModel):
    """Urn process of the interaction model with its exact kernel."""

    def __init__(self, params: ReplicatorParams, tamper: float = 0.0):
        g = params.gamma
        limit_spec = InteractionKernelSpec(
            k=params.k,
            B=params.B,
            D=params.D,
            U=_frozen(params.unaffected),
            gb=g * params.b,
            gd=g * params.d,
            gnu=g * params.nu,
            tgnu=2.0 * (g * params.nu),
            tamper=0.0,
        )
        spec = limit_spec if tamper == 0.0 else replace(limit_spec, tamper=tamper)
        diag = np.diag(params.B) ** 2 + np.diag(params.D) ** 2
        a_bound = (g * params.nu) * float(diag.max())
        rules = _spec_rules(limit_spec)
        super().__init__(
            params.k,
            2,
            rules,
            a_bound=a_bound,
            name="replicator" if tamper == 0.0 else "replicator-tampered",
        )
        self.params = params
        self.tamper = tamper
        self._kernel_spec = spec
        self._limit_spec = limit_spec


def _spec_rules(spec) -> list[TransitionRule]:
    moves = spec.moves

    def rule_prob(e):
        def p(x, _e=e):
            vals = entry_probs(spec, np.asarray(x, dtype=np.float64), 0.0)
            if _e < len(vals):
                return float(vals[_e])
            return float(1.0 - vals.sum())

        return p

    return [
        TransitionRule(move=moves[e], limit_prob=rule_prob(e), label=_move_label(moves[e]))
        for e in range(moves.shape[0])
    ]


def build_replicator(
    params: ReplicatorParams, tamper: float = 0.0
) -> tuple[ReplicatorModel, MeanLimitSystem, np.ndarray]:
    """Model, closed-form mean-limit system, and the payoff matrix A.

    The system is the replicator flow x o (Ax - x'Ax) with growth
    (b-d)/(b+d+nu) + x'Ax; the rule-summation route to the same system is
    derive_system(model), kept separate so the two can be cross-checked.

    ``tamper`` shifts kernel mass so the chain's frequency drift deviates
    from the rules by tamper * (e1 - e2); a negative control for the
    tracking diagnostics (k >= 2 only, rules stay untampered).
    """
    if tamper != 0.0 and params.k < 2:
        raise ModelSpecError("tamper requires k >= 2")
    model = ReplicatorModel(params, tamper=tamper)
    A = _frozen(params.payoff)
    c0 = params.gamma * (params.b - params.d)

    def drift(x, _A=A):
        x = np.asarray(x, dtype=np.float64)
        y = _A @ x
        return x * (y - x @ y)

    def growth(x, _A=A, _c0=c0):
        x = np.asarray(x, dtype=np.float64)
        return _c0 + float(x @ (_A @ x))

    system = MeanLimitSystem(
        k=params.k,
        drift=drift,
        growth=growth,
        field=ReplicatorField(A=A, c0=c0),
        label=model.name,
    )
    return model, system, A


def tampered_replicator(params: ReplicatorParams, tamper: float = 0.1):
    """Negative control whose kernel drifts off its own rules; see
    build_replicator."""
    return build_replicator(params, tamper=tamper)


# ---------------------------------------------------------------------------
# selection-mutation fusion process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OffspringDistribution:
    """Per-type offspring count of one fusion: values (even, >= 0) and
    probabilities."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values, dtype=np.int64)
        p = _frozen(self.probs)
        if v.ndim != 1 or p.shape != v.shape or v.shape[0] == 0:
            raise ModelSpecError("values and probs must be matching 1-d arrays")
        if (np.diff(v) <= 0).any() or v.min() < 0 or (v % 2 != 0).any():
            raise ModelSpecError("values must be ascending even nonnegative integers")
        if p.min() < 0 or abs(p.sum() - 1.0) > 1e-12:
            raise ModelSpecError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @property
    def mean(self) -> float:
        return float(self.values @ self.probs)

    @property
    def zero_prob(self) -> float:
        return float(self.probs[0]) if self.values[0] == 0 else 0.0

    @staticmethod
    def two_point(f: float) -> "OffspringDistribution":
        """Two-point distribution on {0, v} with mean f/2 (v smallest even
        integer >= f)."""
        if f < 0:
            raise ModelSpecError("fitness must be nonnegative")
        if f == 0:
            return OffspringDistribution(values=np.array([0]), probs=np.array([1.0]))
        v = 2 * int(math.ceil(f / 2.0 - 1e-12))
        p = f / (2.0 * v)
        return OffspringDistribution(values=np.array([0, v]), probs=np.array([1.0 - p, p]))


@dataclass(frozen=True)
class SelectionMutationParams:
    """Allele count, gamete death/fusion rates, fitnesses, mutation rates.

    Mutation rates must give every type the same total rate (the common
    row sum mu), so the embedded chain has a constant event-probability
    normalization 1/(d + mu + nu).  ``offspring`` optionally overrides the
    per-pair offspring distributions (mean F[i,j]/2 per type required);
    the default is the two-point distribution above.
    """

    k: int
    d: float
    nu: float
    F: np.ndarray
    Mu: np.ndarray
    offspring: Mapping[tuple[int, int], OffspringDistribution] | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ModelSpecError("need k >= 1")
        if self.d <= 0 or self.nu <= 0:
            raise ModelSpecError("need d > 0 and nu > 0")
        F = _frozen(self.F)
        Mu = _frozen(self.Mu)
        if F.shape != (self.k, self.k) or Mu.shape != (self.k, self.k):
            raise ModelSpecError(f"F and Mu must be {self.k}x{self.k}")
        if not np.allclose(F, F.T, atol=1e-12, rtol=0):
            raise ModelSpecError("F must be symmetric")
        if F.min() < 0:
            raise ModelSpecError("fitnesses must be nonnegative")
        if Mu.min() < 0 or np.abs(np.diag(Mu)).max() > 0:
            raise ModelSpecError("Mu must be nonnegative with zero diagonal")
        rows = Mu.sum(axis=1)
        if np.ptp(rows) > 1e-12 * max(1.0, rows.max()):
            raise ModelSpecError(
                "every type must have the same total mutation rate "
                f"(row sums {rows})"
            )
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "Mu", Mu)
        for (i, j), dist in (self.offspring or {}).items():
            if not (0 <= i <= j < self.k):
                raise ModelSpecError(f"offspring key ({i}, {j}) must have 0 <= i <= j < k")
            if abs(dist.mean - F[i, j] / 2.0) > 1e-12:
                raise ModelSpecError(
                    f"offspring mean for pair ({i}, {j}) must be F[i,j]/2"
                )

    @property
    def mu(self) -> float:
        """Common per-gamete total mutation rate."""
        return float(self.Mu.sum(axis=1)[0]) if self.k > 1 else 0.0

    @property
    def gamma(self) -> float:
        return 1.0 / (self.d + self.mu + self.nu)

    def offspring_for(self, i: int, j: int) -> OffspringDistribution:
        i, j = min(i, j), max(i, j)
        if self.offspring and (i, j) in self.offspring:
            return self.offspring[(i, j)]
        return OffspringDistribution.two_point(float(self.F[i, j]))


class SelectionMutationModel(UrnModel):
    """Urn process of the fusion model with its exact kernel."""

    def __init__(self, params: SelectionMutationParams):
        k = params.k
        g = params.gamma
        fi, fj, fval, fprob = [], [], [], []
        worst = 0.0
        for i in range(k):
            for j in range(i, k):
                dist = params.offspring_for(i, j)
                if i == j:
                    worst = max(worst, 1.0 - dist.zero_prob)
                for v, p in zip(dist.values, dist.probs):
                    if v > 0:
                        fi.append(i)
                        fj.append(j)
                        fval.append(int(v))
                        fprob.append(float(p))
        spec = FusionKernelSpec(
            k=k,
            gMu=_frozen(g * params.Mu),
            gd=g * params.d,
            gnu=g * params.nu,
            tgnu=2.0 * (g * params.nu),
            fi=_frozen(fi, dtype=np.int64),
            fj=_frozen(fj, dtype=np.int64),
            fval=_frozen(fval, dtype=np.int64),
            fprob=_frozen(fprob),
        )
        m = max(2, 2 * max(fval, default=0)) if k > 1 else max(1, 2 * max(fval, default=0))
        rules = _spec_rules(spec)
        super().__init__(
            k,
            m,
            rules,
            a_bound=(g * params.nu) * worst,
            name="selection-mutation",
        )
        self.params = params
        self._kernel_spec = spec
        self._limit_spec = spec


def build_selection_mutation(
    params: SelectionMutationParams,
) -> tuple[SelectionMutationModel, MeanLimitSystem]:
    """Model plus the closed-form mutation-selection flow.

    dx/dt = gamma nu x o (Fx - x'Fx) + gamma (Mu' x - mu x), with growth
    gamma (nu x'Fx - d).
    """
    model = SelectionMutationModel(params)
    g = params.gamma
    GF = _frozen((g * params.nu) * params.F)
    GMT = _frozen(g * params.Mu.T)
    gmu = g * params.mu
    gd = g * params.d

    def drift(x, _GF=GF, _GMT=GMT, _gmu=gmu):
        x = np.asarray(x, dtype=np.float64)
        y = _GF @ x
        return x * (y - x @ y) + (_GMT @ x - _gmu * x)

    def growth(x, _GF=GF, _gd=gd):
        x = np.asarray(x, dtype=np.float64)
        return float(x @ (_GF @ x)) - _gd

    system = MeanLimitSystem(
        k=params.k,
        drift=drift,
        growth=growth,
        field=FusionField(GF=GF, GMT=GMT, gmu=gmu, gd=gd),
        label=model.name,
    )
    return model, system


def cyclic_mutation_example(
    f: float = 1.0,
    s: float | None = None,
    mu1: float = 0.10,
    mu2: float = 0.05,
    nu: float = 1.0,
    d: float = 1.0,
) -> SelectionMutationParams:
    """Three-allele fixture with cyclic asymmetric mutation.

    Homozygote fitness f+s, heterozygote fitness f, mutation rate mu1 one
    step around the cycle and mu2 the other way; mu1 != mu2 required.  A
    Hopf bifurcation of the central equilibrium sits at exactly
    s = 4.5*(mu1+mu2)/nu, and a stable limit cycle exists only slightly
    above it (by ~5% the cycle is gone and near-vertex equilibria win),
    so the default s is 2% above threshold; confirmed by the
    orbit-detection tests before this fixture was frozen.
    """
    if mu1 == mu2:
        raise ModelSpecError("cyclic mutation requires mu1 != mu2")
    if mu1 < 0 or mu2 < 0:
        raise ModelSpecError("mutation rates must be nonnegative")
    if s is None:
        s = 1.02 * 4.5 * (mu1 + mu2) / nu
    F = np.full((3, 3), float(f)) + float(s) * np.eye(3)
    Mu = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            if (i - j) % 3 == 1:
                Mu[i, j] = mu1
            elif (i - j) % 3 == 2:
                Mu[i, j] = mu2
    return SelectionMutationParams(k=3, d=d, nu=nu, F=F, Mu=Mu)


# ---------------------------------------------------------------------------
# small closed-form models used as controls
# ---------------------------------------------------------------------------


def pure_death(k: int = 1) -> UrnModel:
    """Every update removes one individual, chosen by frequency."""
    eye = np.eye(k, dtype=np.int64)
    rules = [
        TransitionRule(move=-eye[i], limit_prob=lambda x, i=i: float(x[i]), label=f"-e{i + 1}")
        for i in range(k)
    ]
    return make_model(k, rules, name="pure-death")


def pure_birth(k: int = 1) -> UrnModel:
    """Every update adds one individual of type 1."""
    eye = np.eye(k, dtype=np.int64)
    rules = [TransitionRule(move=eye[0], limit_prob=lambda x: 1.0, label="+e1")]
    return make_model(k, rules, name="pure-birth")


def coin_flip(k: int = 1) -> UrnModel:
    """Type-1 count random walk: +1 or -1 with equal probability."""
    eye = np.eye(k, dtype=np.int64)
    rules = [
        TransitionRule(move=eye[0], limit_prob=lambda x: 0.5, label="+e1"),
        TransitionRule(move=-eye[0], limit_prob=lambda x: 0.5, label="-e1"),
    ]
    return make_model(k, rules, name="coin-flip")


def type_switch(k: int) -> UrnModel:
    """Population-preserving switches: one individual changes type."""
    if k < 2:
        raise ModelSpecError("type switching needs k >= 2")
    eye = np.eye(k, dtype=np.int64)
    rules = [
        TransitionRule(
            move=eye[j] - eye[i],
            limit_prob=lambda x, i=i: float(x[i]) / (k - 1),
            label=f"+e{j + 1} -e{i + 1}",
        )
        for i in range(k)
        for j in range(k)
        if j != i
    ]
    return make_model(k, rules, name="type-switch")
