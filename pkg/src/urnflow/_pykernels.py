"""Pure-Python simulation and integration kernels.

Reference implementations of the hot loops.  ``urnflow._kernels`` is the
compiled drop-in replacement; both follow the same canonical outcome
enumeration and perform the same IEEE-754 operations in the same order, so
chain runs are bit-identical across backends (ODE flows agree to roundoff
but may differ in the last bits because the fallback uses BLAS matvecs).

Canonical outcome order, interaction model (k types, matrices B/D/U):

    [0, k)            single birth  +e_i   (baseline + encounter births)
    [k, 2k)           single death  -e_i
    next k(k-1)/2     paired birth  e_i+e_j     for i < j
    next k            double birth  2e_i        (same-type pair, corrected)
    next k(k-1)/2     paired death  -e_i-e_j    for i < j
    next k            double death  -2e_i       (corrected)
    next k(k-1)       birth/death   e_i-e_j     ordered, i != j
    last              null move (mass remainder)

and for the fusion model (deaths, mutations, pair fusions):

    [0, k)            death    -e_i
    next k(k-1)       mutation e_j-e_i   ordered, i != j
    next n_fusion     fusion   v*(e_i+e_j) per pair i <= j, per positive
                               offspring count v (ascending)
    last              null move (zero-offspring fusions + corrections)

Same-type pair probabilities use the finite-population correction
x_i -> x_i*(x_i - 1/|z|); the freed mass lands on the null move.  Passing
``inv_n = 0`` evaluates the infinite-population limits ``p_w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FlowDomainError, KernelMassError, NegativeCountError

# Mass unaccounted for by a model's rules beyond this is an error.
MASS_TOL = 1e-9

# Coordinates below -CLIP_TOL after an integration step signal blow-up;
# anything in [-CLIP_TOL, 0) is roundoff and is clipped.
CLIP_TOL = 1e-12


# ---------------------------------------------------------------------------
# kernel specs (consumed by both backends)
# ---------------------------------------------------------------------------


def _interaction_moves(k: int) -> np.ndarray:
    moves = []
    eye = np.eye(k, dtype=np.int64)
    for i in range(k):
        moves.append(eye[i])
    for i in range(k):
        moves.append(-eye[i])
    for i in range(k):
        for j in range(i + 1, k):
            moves.append(eye[i] + eye[j])
    for i in range(k):
        moves.append(2 * eye[i])
    for i in range(k):
        for j in range(i + 1, k):
            moves.append(-eye[i] - eye[j])
    for i in range(k):
        moves.append(-2 * eye[i])
    for i in range(k):
        for j in range(k):
            if j != i:
                moves.append(eye[i] - eye[j])
    moves.append(np.zeros(k, dtype=np.int64))
    return np.array(moves, dtype=np.int64)


def _fusion_moves(k: int, fi: np.ndarray, fj: np.ndarray, fval: np.ndarray) -> np.ndarray:
    moves = []
    eye = np.eye(k, dtype=np.int64)
    for i in range(k):
        moves.append(-eye[i])
    for i in range(k):
        for j in range(k):
            if j != i:
                moves.append(eye[j] - eye[i])
    for i, j, v in zip(fi, fj, fval):
        moves.append(int(v) * (eye[int(i)] + eye[int(j)]))
    moves.append(np.zeros(k, dtype=np.int64))
    return np.array(moves, dtype=np.int64)


@dataclass(frozen=True)
class InteractionKernelSpec:
    """Birth/death/encounter process kernel (replicator-type models)."""

    k: int
    B: np.ndarray
    D: np.ndarray
    U: np.ndarray
    gb: float  # gamma * b
    gd: float  # gamma * d
    gnu: float  # gamma * nu
    tgnu: float  # 2 * gamma * nu
    tamper: float = 0.0  # diagnostic drift perturbation, see tampered models
    moves: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    kind = "interaction"

    def __post_init__(self):
        if self.moves is None:
            object.__setattr__(self, "moves", _interaction_moves(self.k))


@dataclass(frozen=True)
class FusionKernelSpec:
    """Death/mutation/fusion process kernel (selection-mutation models)."""

    k: int
    gMu: np.ndarray  # gamma * mutation-rate matrix
    gd: float
    gnu: float
    tgnu: float
    fi: np.ndarray  # fusion pair first index, i <= j
    fj: np.ndarray
    fval: np.ndarray  # per-type offspring count (> 0)
    fprob: np.ndarray  # probability of that count for the pair
    moves: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    kind = "fusion"

    def __post_init__(self):
        if self.moves is None:
            object.__setattr__(
                self, "moves", _fusion_moves(self.k, self.fi, self.fj, self.fval)
            )


@dataclass(frozen=True)
class GenericKernelSpec:
    """Arbitrary rule set evaluated in Python (no compiled counterpart).

    ``probs_fn(x, inv_n)`` returns the outcome probabilities in move order;
    ``moves`` carries one trailing null row.  The probabilities must account
    for all mass themselves (any remainder beyond roundoff is an error).
    """

    k: int
    moves: np.ndarray
    probs_fn: object

    kind = "generic"
    require_full_mass = True


def _seqsum_cols(t: np.ndarray) -> np.ndarray:
    """Row sums accumulated left to right (matches the C inner loop)."""
    acc = t[:, 0].copy()
    for j in range(1, t.shape[1]):
        acc = acc + t[:, j]
    return acc


def interaction_entry_probs(spec: InteractionKernelSpec, x: np.ndarray, inv_n: float) -> np.ndarray:
    """Outcome probabilities (canonical order, null excluded) at frequency x.

    ``inv_n`` is 1/|z| for the exact kernel at population |z|, or 0 for the
    limiting transition functions.
    """
    B, D, U = spec.B, spec.D, spec.U
    k = spec.k
    tx = spec.tgnu * x
    gx = spec.gnu * x
    iu, ju = np.triu_indices(k, 1)
    off = ~np.eye(k, dtype=bool)

    sb = _seqsum_cols((x[None, :] * B) * U.T)
    sd = _seqsum_cols((x[None, :] * D) * U.T)
    births = x * spec.gb + tx * sb
    deaths = x * spec.gd + tx * sd

    pp = tx[:, None] * x[None, :]
    dbl = gx * (x - inv_n)
    both_birth = (pp * (B * B.T))[iu, ju]
    double_birth = dbl * (np.diag(B) * np.diag(B))
    both_death = (pp * (D * D.T))[iu, ju]
    double_death = dbl * (np.diag(D) * np.diag(D))
    birth_death = (pp * (B * D.T))[off]

    probs = np.concatenate(
        [births, deaths, both_birth, double_birth, both_death, double_death, birth_death]
    )
    if spec.tamper != 0.0:
        # extra birth of type 1 plus, where type 2 is present, an extra
        # death of type 2: shifts the frequency drift by tamper*(e1 - e2)
        probs[0] = probs[0] + spec.tamper
        if x[1] >= inv_n:
            probs[k + 1] = probs[k + 1] + spec.tamper
    return probs


def fusion_entry_probs(spec: FusionKernelSpec, x: np.ndarray, inv_n: float) -> np.ndarray:
    deaths = x * spec.gd
    mutations = (spec.gMu * x[:, None])[~np.eye(spec.k, dtype=bool)]
    tx = spec.tgnu * x
    gx = spec.gnu * x
    same = spec.fi == spec.fj
    mass = np.where(same, gx[spec.fi] * (x[spec.fi] - inv_n), tx[spec.fi] * x[spec.fj])
    return np.concatenate([deaths, mutations, mass * spec.fprob])


def entry_probs(spec, x: np.ndarray, inv_n: float) -> np.ndarray:
    if spec.kind == "interaction":
        return interaction_entry_probs(spec, x, inv_n)
    if spec.kind == "fusion":
        return fusion_entry_probs(spec, x, inv_n)
    return spec.probs_fn(x, inv_n)


# ---------------------------------------------------------------------------
# chain simulation
# ---------------------------------------------------------------------------

STOP_NONE = 0
STOP_EXTINCT = 1
STOP_POPULATION = 2
STOP_STEPS = 3
STOP_TAU = 4
STOP_ALL = 5
STOP_HARD_CAP = 6

STOP_NAMES = {
    STOP_EXTINCT: "extinct",
    STOP_POPULATION: "max_population",
    STOP_STEPS: "max_steps",
    STOP_TAU: "max_tau",
    STOP_ALL: "all",
    STOP_HARD_CAP: "hard_cap",
}


def _stop_code(n, pop, tau, n_max, pop_max, tau_max, on_extinct, stop_all):
    if stop_all:
        ok = True
        present = False
        if on_extinct:
            present = True
            ok = ok and pop == 0
        if n_max >= 0:
            present = True
            ok = ok and n >= n_max
        if pop_max >= 0:
            present = True
            ok = ok and pop >= pop_max
        if tau_max >= 0.0:
            present = True
            ok = ok and tau >= tau_max
        return STOP_ALL if (present and ok) else STOP_NONE
    if on_extinct and pop == 0:
        return STOP_EXTINCT
    if pop_max >= 0 and pop >= pop_max:
        return STOP_POPULATION
    if n_max >= 0 and n >= n_max:
        return STOP_STEPS
    if tau_max >= 0.0 and tau >= tau_max:
        return STOP_TAU
    return STOP_NONE


def run_chain(
    spec,
    z0: np.ndarray,
    gen: np.random.Generator,
    *,
    n_max: int = -1,
    pop_max: int = -1,
    tau_max: float = -1.0,
    on_extinct: bool = True,
    stop_all: bool = False,
    thin: int = 1,
    forced: np.ndarray | None = None,
    hard_cap: int = -1,
) -> dict:
    """Simulate one chain path; see urn.simulate for the public wrapper.

    Consumes exactly one uniform per update at a nonzero state and none
    while extinct.  Records every ``thin``-th state, every index in
    ``forced``, and always the initial and final states.
    """
    k = spec.k
    moves = spec.moves
    z = np.array(z0, dtype=np.int64).copy()
    pop = int(z.sum())
    n = 0
    tau = 0.0
    s15 = 0.0
    s20 = 0.0
    if pop > 0:
        inv = 1.0 / pop
        s15 += inv * math.sqrt(inv)
        s20 += inv * inv
    if forced is None:
        forced = np.empty(0, dtype=np.int64)
    fpos = 0

    rows_n, rows_tau, rows_z, rows_s15, rows_s20 = [], [], [], [], []

    def record():
        rows_n.append(n)
        rows_tau.append(tau)
        rows_z.append(z.copy())
        rows_s15.append(s15)
        rows_s20.append(s20)

    record()
    buf = np.empty(8192, dtype=np.float64)
    pos = buf.shape[0]
    n_entries = moves.shape[0] - 1  # null excluded

    code = _stop_code(n, pop, tau, n_max, pop_max, tau_max, on_extinct, stop_all)
    while code == STOP_NONE:
        if hard_cap >= 0 and n >= hard_cap:
            code = STOP_HARD_CAP
            break
        if pop == 0:
            tau += 1.0
        else:
            inv_n = 1.0 / pop
            x = z * inv_n
            probs = entry_probs(spec, x, inv_n)
            cum = np.add.accumulate(probs)
            if cum[n_entries - 1] > 1.0 + MASS_TOL:
                raise KernelMassError(
                    f"outcome mass {cum[n_entries - 1]} exceeds 1 at state {z}"
                )
            if getattr(spec, "require_full_mass", False) and cum[n_entries - 1] < 1.0 - MASS_TOL:
                raise KernelMassError(
                    f"kernel mass deficit {1.0 - cum[n_entries - 1]} at state {z}: "
                    "ill-specified model"
                )
            if pos >= buf.shape[0]:
                gen.random(out=buf)
                pos = 0
            u = buf[pos]
            pos += 1
            idx = int(np.searchsorted(cum, u, side="right"))
            if idx < n_entries:
                z += moves[idx]
                if z.min() < 0:
                    raise NegativeCountError(
                        f"move {moves[idx]} at state {z - moves[idx]} leaves a negative count"
                    )
                pop = int(z.sum())
            tau += inv_n
        n += 1
        if pop > 0:
            inv = 1.0 / pop
            s15 += inv * math.sqrt(inv)
            s20 += inv * inv
        while fpos < forced.shape[0] and forced[fpos] < n:
            fpos += 1
        code = _stop_code(n, pop, tau, n_max, pop_max, tau_max, on_extinct, stop_all)
        if (
            n % thin == 0
            or (fpos < forced.shape[0] and forced[fpos] == n)
            or code != STOP_NONE
        ):
            record()

    if rows_n[-1] != n:
        record()
    return {
        "n": np.array(rows_n, dtype=np.int64),
        "tau": np.array(rows_tau, dtype=np.float64),
        "z": np.array(rows_z, dtype=np.int64).reshape(len(rows_n), k),
        "s15": np.array(rows_s15, dtype=np.float64),
        "s20": np.array(rows_s20, dtype=np.float64),
        "stop": STOP_NAMES.get(code, "none"),
        "steps": n,
    }


# ---------------------------------------------------------------------------
# ODE fields and fixed-step integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicatorField:
    """dx/dt = x o (Ax - x'Ax); population growth rate c0 + x'Ax."""

    A: np.ndarray
    c0: float


@dataclass(frozen=True)
class FusionField:
    """dx/dt = x o (GFx - x'GFx) + (GMT x - gmu * x); growth x'GFx - gd."""

    GF: np.ndarray
    GMT: np.ndarray
    gmu: float
    gd: float


def field_drift(fs, x: np.ndarray) -> np.ndarray:
    if isinstance(fs, ReplicatorField):
        y = fs.A @ x
        return x * (y - x @ y)
    y = fs.GF @ x
    return x * (y - x @ y) + (fs.GMT @ x - fs.gmu * x)


def field_growth(fs, pts: np.ndarray) -> np.ndarray:
    """Population growth rate at one point or a batch of points."""
    pts = np.asarray(pts, dtype=np.float64)
    single = pts.ndim == 1
    X = pts[None, :] if single else pts
    if isinstance(fs, ReplicatorField):
        vals = fs.c0 + np.einsum("mi,ij,mj->m", X, fs.A, X)
    else:
        vals = np.einsum("mi,ij,mj->m", X, fs.GF, X) - fs.gd
    return float(vals[0]) if single else vals


def _renormalize(x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise FlowDomainError("non-finite coordinates during integration")
    low = x.min()
    if low < -CLIP_TOL:
        raise FlowDomainError(f"coordinate {low} below -{CLIP_TOL}: integration blow-up")
    if low < 0.0:
        x = np.where(x < 0.0, 0.0, x)
    s = x.sum()
    if s <= 0.0:
        raise FlowDomainError("simplex renormalization with nonpositive total")
    return x / s


def _rk4_step(drift, x: np.ndarray, h: float) -> np.ndarray:
    hh = h * 0.5
    k1 = drift(x)
    k2 = drift(x + hh * k1)
    k3 = drift(x + hh * k2)
    k4 = drift(x + h * k3)
    return _renormalize(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def rk4_path(drift, x0: np.ndarray, h: float, n_steps: int, stride: int = 1):
    """Classical fixed-step integration with post-step renormalization.

    Returns (times, points); row 0 is (0, x0).  ``drift`` is either a field
    spec or a callable.
    """
    if not callable(drift):
        fs = drift
        drift = lambda x: field_drift(fs, x)
    x = _renormalize(np.array(x0, dtype=np.float64))
    n_rec = n_steps // stride + (1 if n_steps % stride else 0) + 1
    k = x.shape[0]
    times = np.empty(n_rec, dtype=np.float64)
    pts = np.empty((n_rec, k), dtype=np.float64)
    times[0] = 0.0
    pts[0] = x
    r = 1
    for s in range(1, n_steps + 1):
        x = _rk4_step(drift, x, h)
        if s % stride == 0 or s == n_steps:
            times[r] = s * h
            pts[r] = x
            r += 1
    return times[:r], pts[:r]


def flow_at_times(drift, x0: np.ndarray, times: np.ndarray, h: float) -> np.ndarray:
    """Flow started at x0 (time 0) evaluated at sorted nonnegative times.

    Gaps larger than h are split into equal substeps no longer than h.
    """
    if not callable(drift):
        fs = drift
        drift = lambda x: field_drift(fs, x)
    x = _renormalize(np.array(x0, dtype=np.float64))
    out = np.empty((len(times), x.shape[0]), dtype=np.float64)
    t_cur = 0.0
    for m, t in enumerate(times):
        gap = t - t_cur
        if gap < 0:
            raise ValueError("times must be sorted ascending from 0")
        if gap > 0:
            nsub = max(1, int(math.ceil(gap / h - 1e-12)))
            hs = gap / nsub
            for _ in range(nsub):
                x = _rk4_step(drift, x, hs)
            t_cur = t
        out[m] = x
    return out
