# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled simulation and integration kernels.

Mirror of ``urnflow._pykernels``: same canonical outcome enumeration, same
operation order (the extension is compiled with -ffp-contract=off), so chain
paths are bit-identical across backends given the same seed.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, ceil, isfinite

cnp.import_array()

from .errors import FlowDomainError, KernelMassError, NegativeCountError

MASS_TOL = 1e-9
cdef double _MASS_TOL = 1e-9
cdef double _CLIP_TOL = 1e-12

KIND_INTERACTION = 0
KIND_FUSION = 1

DEF MAX_K = 16


# ---------------------------------------------------------------------------
# outcome probabilities (canonical order, null excluded)
# ---------------------------------------------------------------------------

cdef inline void _interaction_probs(
    int k, double* x, double inv_n,
    const double* B, const double* D, const double* U,
    double gb, double gd, double gnu, double tgnu, double tamper,
    double* out,
) noexcept nogil:
    cdef int i, j, e = 0
    cdef double s
    for i in range(k):
        s = 0.0
        for j in range(k):
            s += (x[j] * B[i * k + j]) * U[j * k + i]
        out[e] = x[i] * gb + (tgnu * x[i]) * s
        e += 1
    for i in range(k):
        s = 0.0
        for j in range(k):
            s += (x[j] * D[i * k + j]) * U[j * k + i]
        out[e] = x[i] * gd + (tgnu * x[i]) * s
        e += 1
    for i in range(k):
        for j in range(i + 1, k):
            out[e] = ((tgnu * x[i]) * x[j]) * (B[i * k + j] * B[j * k + i])
            e += 1
    for i in range(k):
        out[e] = ((gnu * x[i]) * (x[i] - inv_n)) * (B[i * k + i] * B[i * k + i])
        e += 1
    for i in range(k):
        for j in range(i + 1, k):
            out[e] = ((tgnu * x[i]) * x[j]) * (D[i * k + j] * D[j * k + i])
            e += 1
    for i in range(k):
        out[e] = ((gnu * x[i]) * (x[i] - inv_n)) * (D[i * k + i] * D[i * k + i])
        e += 1
    for i in range(k):
        for j in range(k):
            if j != i:
                out[e] = ((tgnu * x[i]) * x[j]) * (B[i * k + j] * D[j * k + i])
                e += 1
    if tamper != 0.0:
        out[0] = out[0] + tamper
        if x[1] >= inv_n:
            out[k + 1] = out[k + 1] + tamper


cdef inline void _fusion_probs(
    int k, double* x, double inv_n,
    const double* gMu, double gd, double gnu, double tgnu,
    const cnp.int64_t* fi, const cnp.int64_t* fj, const double* fprob, int nfus,
    double* out,
) noexcept nogil:
    cdef int i, j, f, e = 0
    cdef double mass
    for i in range(k):
        out[e] = x[i] * gd
        e += 1
    for i in range(k):
        for j in range(k):
            if j != i:
                out[e] = gMu[i * k + j] * x[i]
                e += 1
    for f in range(nfus):
        i = <int> fi[f]
        j = <int> fj[f]
        if i == j:
            mass = (gnu * x[i]) * (x[i] - inv_n)
        else:
            mass = (tgnu * x[i]) * x[j]
        out[e] = mass * fprob[f]
        e += 1


# ---------------------------------------------------------------------------
# chain simulation
# ---------------------------------------------------------------------------

cdef inline int _stop_code(
    long long n, long long pop, double tau,
    long long n_max, long long pop_max, double tau_max,
    bint on_extinct, bint stop_all,
) noexcept nogil:
    cdef bint ok, present
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
        return 5 if (present and ok) else 0
    if on_extinct and pop == 0:
        return 1
    if pop_max >= 0 and pop >= pop_max:
        return 2
    if n_max >= 0 and n >= n_max:
        return 3
    if tau_max >= 0.0 and tau >= tau_max:
        return 4
    return 0


_STOP_NAMES = {1: "extinct", 2: "max_population", 3: "max_steps",
               4: "max_tau", 5: "all", 6: "hard_cap"}


def run_chain_ext(
    int kind,
    const cnp.int64_t[::1] z0,
    const double[:, ::1] B, const double[:, ::1] D, const double[:, ::1] U,
    double gb, double gd, double gnu, double tgnu, double tamper,
    const double[:, ::1] gMu,
    const cnp.int64_t[::1] fi, const cnp.int64_t[::1] fj, const double[::1] fprob, int nfus,
    const cnp.int64_t[:, ::1] moves,
    object gen,
    long long n_max, long long pop_max, double tau_max,
    bint on_extinct, bint stop_all,
    long long thin, const cnp.int64_t[::1] forced, long long hard_cap,
):
    """One chain path; same contract and stream consumption as the Python
    backend's run_chain.  fi/fj/fprob must have length >= 1 (pad with a
    dummy row when nfus == 0)."""
    cdef int k = z0.shape[0]
    cdef int n_entries = moves.shape[0] - 1
    cdef long long nforced = forced.shape[0]

    z_arr = np.array(z0, dtype=np.int64)
    cdef cnp.int64_t[::1] z = z_arr
    probs_arr = np.empty(n_entries, dtype=np.float64)
    cdef double[::1] probs = probs_arr
    cum_arr = np.empty(n_entries, dtype=np.float64)
    cdef double[::1] cum = cum_arr
    cdef double x[MAX_K]

    cdef long long cap
    if n_max >= 0:
        cap = n_max // thin + nforced + 4
    elif hard_cap >= 0:
        cap = hard_cap // thin + nforced + 4
    else:
        cap = 1 << 16
    ns_arr = np.empty(cap, dtype=np.int64)
    taus_arr = np.empty(cap, dtype=np.float64)
    zs_arr = np.empty((cap, k), dtype=np.int64)
    s15_arr = np.empty(cap, dtype=np.float64)
    s20_arr = np.empty(cap, dtype=np.float64)
    cdef cnp.int64_t[::1] ns = ns_arr
    cdef double[::1] taus = taus_arr
    cdef cnp.int64_t[:, ::1] zs = zs_arr
    cdef double[::1] s15v = s15_arr
    cdef double[::1] s20v = s20_arr

    ubuf_arr = np.empty(8192, dtype=np.float64)
    cdef double[::1] ubuf = ubuf_arr
    cdef long long upos = 8192

    cdef long long rows = 0, fpos = 0
    cdef long long n = 0, pop = 0
    cdef double tau = 0.0, s15 = 0.0, s20 = 0.0
    cdef double inv, inv_n, u, running, bad_mass
    cdef int i, e, sel, code, status
    cdef bint want_record

    if k > MAX_K:
        raise ValueError(f"state dimension {k} exceeds compiled limit {MAX_K}")

    for i in range(k):
        pop += z[i]
    if pop > 0:
        inv = 1.0 / pop
        s15 += inv * sqrt(inv)
        s20 += inv * inv

    # row 0
    ns[0] = 0
    taus[0] = 0.0
    for i in range(k):
        zs[0, i] = z[i]
    s15v[0] = s15
    s20v[0] = s20
    rows = 1

    code = _stop_code(n, pop, tau, n_max, pop_max, tau_max, on_extinct, stop_all)
    bad_mass = 0.0
    while code == 0:
        status = 0
        with nogil:
            while code == 0:
                if hard_cap >= 0 and n >= hard_cap:
                    code = 6
                    break
                if pop == 0:
                    tau += 1.0
                else:
                    if upos >= 8192:
                        status = 1  # need uniforms
                        break
                    inv_n = 1.0 / pop
                    for i in range(k):
                        x[i] = z[i] * inv_n
                    if kind == 0:
                        _interaction_probs(k, x, inv_n, &B[0, 0], &D[0, 0], &U[0, 0],
                                           gb, gd, gnu, tgnu, tamper, &probs[0])
                    else:
                        _fusion_probs(k, x, inv_n, &gMu[0, 0], gd, gnu, tgnu,
                                      &fi[0], &fj[0], &fprob[0], nfus, &probs[0])
                    running = 0.0
                    for e in range(n_entries):
                        running += probs[e]
                        cum[e] = running
                    if cum[n_entries - 1] > 1.0 + _MASS_TOL:
                        status = 3
                        bad_mass = cum[n_entries - 1]
                        break
                    u = ubuf[upos]
                    upos += 1
                    sel = n_entries
                    for e in range(n_entries):
                        if u < cum[e]:
                            sel = e
                            break
                    if sel < n_entries:
                        pop = 0
                        for i in range(k):
                            z[i] = z[i] + moves[sel, i]
                            if z[i] < 0:
                                status = 4
                                break
                            pop += z[i]
                        if status != 0:
                            break
                    tau += inv_n
                n += 1
                if pop > 0:
                    inv = 1.0 / pop
                    s15 += inv * sqrt(inv)
                    s20 += inv * inv
                while fpos < nforced and forced[fpos] < n:
                    fpos += 1
                code = _stop_code(n, pop, tau, n_max, pop_max, tau_max,
                                  on_extinct, stop_all)
                want_record = (n % thin == 0
                               or (fpos < nforced and forced[fpos] == n)
                               or code != 0)
                if want_record:
                    if rows >= cap:
                        status = 2  # need capacity
                        break
                    ns[rows] = n
                    taus[rows] = tau
                    for i in range(k):
                        zs[rows, i] = z[i]
                    s15v[rows] = s15
                    s20v[rows] = s20
                    rows += 1
        if status == 1:
            gen.random(out=ubuf_arr)
            upos = 0
        elif status == 2:
            cap = cap * 2
            ns_arr = np.concatenate([ns_arr, np.empty(cap - ns_arr.shape[0], dtype=np.int64)])
            taus_arr = np.concatenate([taus_arr, np.empty(cap - taus_arr.shape[0], dtype=np.float64)])
            zs_arr = np.concatenate([zs_arr, np.empty((cap - zs_arr.shape[0], k), dtype=np.int64)])
            s15_arr = np.concatenate([s15_arr, np.empty(cap - s15_arr.shape[0], dtype=np.float64)])
            s20_arr = np.concatenate([s20_arr, np.empty(cap - s20_arr.shape[0], dtype=np.float64)])
            ns = ns_arr
            taus = taus_arr
            zs = zs_arr
            s15v = s15_arr
            s20v = s20_arr
            # re-record the pending row
            ns[rows] = n
            taus[rows] = tau
            for i in range(k):
                zs[rows, i] = z[i]
            s15v[rows] = s15
            s20v[rows] = s20
            rows += 1
        elif status == 3:
            raise KernelMassError(
                f"outcome mass {bad_mass} exceeds 1 at state {np.asarray(z)}"
            )
        elif status == 4:
            raise NegativeCountError(
                f"a sampled move left a negative count near state {np.asarray(z)}"
            )

    if ns[rows - 1] != n:
        if rows >= cap:
            ns_arr = np.concatenate([ns_arr, np.empty(4, dtype=np.int64)])
            taus_arr = np.concatenate([taus_arr, np.empty(4, dtype=np.float64)])
            zs_arr = np.concatenate([zs_arr, np.empty((4, k), dtype=np.int64)])
            s15_arr = np.concatenate([s15_arr, np.empty(4, dtype=np.float64)])
            s20_arr = np.concatenate([s20_arr, np.empty(4, dtype=np.float64)])
            ns = ns_arr
            taus = taus_arr
            zs = zs_arr
            s15v = s15_arr
            s20v = s20_arr
        ns[rows] = n
        taus[rows] = tau
        for i in range(k):
            zs[rows, i] = z[i]
        s15v[rows] = s15
        s20v[rows] = s20
        rows += 1

    return {
        "n": ns_arr[:rows].copy(),
        "tau": taus_arr[:rows].copy(),
        "z": zs_arr[:rows].copy(),
        "s15": s15_arr[:rows].copy(),
        "s20": s20_arr[:rows].copy(),
        "stop": _STOP_NAMES.get(code, "none"),
        "steps": n,
    }


# ---------------------------------------------------------------------------
# ODE fields and fixed-step integration
# ---------------------------------------------------------------------------

cdef inline void _field(
    int kind, int k, const double* A, const double* M2, double gmu,
    double* x, double* y, double* g,
) noexcept nogil:
    cdef int i, j
    cdef double q = 0.0, s
    for i in range(k):
        s = 0.0
        for j in range(k):
            s += A[i * k + j] * x[j]
        y[i] = s
    for i in range(k):
        q += x[i] * y[i]
    if kind == 0:
        for i in range(k):
            g[i] = x[i] * (y[i] - q)
    else:
        for i in range(k):
            s = 0.0
            for j in range(k):
                s += M2[i * k + j] * x[j]
            g[i] = x[i] * (y[i] - q) + (s - gmu * x[i])


cdef inline int _renorm(int k, double* x) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(k):
        if not isfinite(x[i]):
            return 2
        if x[i] < 0.0:
            if x[i] < -_CLIP_TOL:
                return 1
            x[i] = 0.0
        s += x[i]
    if s <= 0.0:
        return 2
    for i in range(k):
        x[i] = x[i] / s
    return 0


cdef inline int _rk4_step(
    int kind, int k, const double* A, const double* M2, double gmu,
    double* x, double h, double* w,
) noexcept nogil:
    # w: workspace of 6*k doubles (y, k1..k4, xs)
    cdef double* y = w
    cdef double* k1 = w + k
    cdef double* k2 = w + 2 * k
    cdef double* k3 = w + 3 * k
    cdef double* k4 = w + 4 * k
    cdef double* xs = w + 5 * k
    cdef double hh = h * 0.5
    cdef int i
    _field(kind, k, A, M2, gmu, x, y, k1)
    for i in range(k):
        xs[i] = x[i] + hh * k1[i]
    _field(kind, k, A, M2, gmu, xs, y, k2)
    for i in range(k):
        xs[i] = x[i] + hh * k2[i]
    _field(kind, k, A, M2, gmu, xs, y, k3)
    for i in range(k):
        xs[i] = x[i] + h * k3[i]
    _field(kind, k, A, M2, gmu, xs, y, k4)
    for i in range(k):
        x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return _renorm(k, x)


def rk4_path_ext(
    int kind, const double[:, ::1] A, const double[:, ::1] M2, double gmu,
    const double[::1] x0, double h, long long n_steps, long long stride,
):
    cdef int k = x0.shape[0]
    cdef double x[MAX_K]
    cdef double w[6 * MAX_K]
    cdef int i, err = 0
    cdef long long s, r = 1

    if k > MAX_K:
        raise ValueError(f"dimension {k} exceeds compiled limit {MAX_K}")
    for i in range(k):
        x[i] = x0[i]
    if _renorm(k, x) != 0:
        raise FlowDomainError("initial point not on the simplex")

    cdef long long n_rec = n_steps // stride + (1 if n_steps % stride else 0) + 1
    times_arr = np.empty(n_rec, dtype=np.float64)
    pts_arr = np.empty((n_rec, k), dtype=np.float64)
    cdef double[::1] times = times_arr
    cdef double[:, ::1] pts = pts_arr
    times[0] = 0.0
    for i in range(k):
        pts[0, i] = x[i]

    with nogil:
        for s in range(1, n_steps + 1):
            err = _rk4_step(kind, k, &A[0, 0], &M2[0, 0], gmu, x, h, w)
            if err != 0:
                break
            if s % stride == 0 or s == n_steps:
                times[r] = s * h
                for i in range(k):
                    pts[r, i] = x[i]
                r += 1
    if err == 1:
        raise FlowDomainError(f"coordinate below -{_CLIP_TOL}: integration blow-up")
    if err == 2:
        raise FlowDomainError("non-finite coordinates during integration")
    return times_arr[:r], pts_arr[:r]


def flow_at_times_ext(
    int kind, const double[:, ::1] A, const double[:, ::1] M2, double gmu,
    const double[::1] x0, const double[::1] times, double h,
):
    cdef int k = x0.shape[0]
    cdef double x[MAX_K]
    cdef double w[6 * MAX_K]
    cdef int i, err = 0
    cdef long long m, sub, nsub
    cdef double t_cur = 0.0, gap, hs

    if k > MAX_K:
        raise ValueError(f"dimension {k} exceeds compiled limit {MAX_K}")
    for i in range(k):
        x[i] = x0[i]
    if _renorm(k, x) != 0:
        raise FlowDomainError("initial point not on the simplex")

    out_arr = np.empty((times.shape[0], k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for m in range(times.shape[0]):
            gap = times[m] - t_cur
            if gap < 0:
                err = 3
                break
            if gap > 0:
                nsub = <long long> ceil(gap / h - 1e-12)
                if nsub < 1:
                    nsub = 1
                hs = gap / nsub
                for sub in range(nsub):
                    err = _rk4_step(kind, k, &A[0, 0], &M2[0, 0], gmu, x, hs, w)
                    if err != 0:
                        break
                if err != 0:
                    break
                t_cur = times[m]
            for i in range(k):
                out[m, i] = x[i]
    if err == 1:
        raise FlowDomainError(f"coordinate below -{_CLIP_TOL}: integration blow-up")
    if err == 2:
        raise FlowDomainError("non-finite coordinates during integration")
    if err == 3:
        raise ValueError("times must be sorted ascending from 0")
    return out_arr
