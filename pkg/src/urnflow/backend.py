"""Backend selection: compiled kernels when available, pure Python otherwise.

Set URNFLOW_BACKEND=python (or =compiled) to force a choice; the default
is the compiled extension if it imports.  Chain simulation is bit-identical
across backends; ODE flows agree to floating-point roundoff.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels as pk
from ._pykernels import FusionField, FusionKernelSpec, InteractionKernelSpec, ReplicatorField

try:
    from . import _kernels as ck

    _HAVE_EXT = True
except ImportError:  # pragma: no cover - build-dependent
    ck = None
    _HAVE_EXT = False

_FORCED = os.environ.get("URNFLOW_BACKEND", "auto").lower()
if _FORCED not in ("auto", "compiled", "python"):
    raise ValueError(f"URNFLOW_BACKEND must be auto|compiled|python, got {_FORCED!r}")
if _FORCED == "compiled" and not _HAVE_EXT:
    raise ImportError("URNFLOW_BACKEND=compiled but urnflow._kernels is not built")

USE_COMPILED = _HAVE_EXT and _FORCED != "python"


def backend_name() -> str:
    return "compiled" if USE_COMPILED else "python"


def has_compiled() -> bool:
    return _HAVE_EXT


_DUMMY_M = np.zeros((1, 1), dtype=np.float64)
_DUMMY_I = np.zeros(1, dtype=np.int64)
_DUMMY_F = np.zeros(1, dtype=np.float64)


def _pad1_i(a: np.ndarray) -> np.ndarray:
    return a if a.shape[0] else _DUMMY_I


def _pad1_f(a: np.ndarray) -> np.ndarray:
    return a if a.shape[0] else _DUMMY_F


def run_chain(spec, z0, gen, *, compiled: bool | None = None, **kw) -> dict:
    """Dispatch one chain run to the selected backend."""
    use = USE_COMPILED if compiled is None else (compiled and _HAVE_EXT)
    if not use:
        return pk.run_chain(spec, z0, gen, **kw)
    forced = kw.get("forced")
    if forced is None:
        forced = np.empty(0, dtype=np.int64)
    forced = np.ascontiguousarray(forced, dtype=np.int64)
    z0 = np.ascontiguousarray(z0, dtype=np.int64)
    common = dict(
        gen=gen,
        n_max=kw.get("n_max", -1),
        pop_max=kw.get("pop_max", -1),
        tau_max=kw.get("tau_max", -1.0),
        on_extinct=kw.get("on_extinct", True),
        stop_all=kw.get("stop_all", False),
        thin=kw.get("thin", 1),
        forced=forced,
        hard_cap=kw.get("hard_cap", -1),
    )
    if isinstance(spec, InteractionKernelSpec):
        return ck.run_chain_ext(
            ck.KIND_INTERACTION, z0,
            spec.B, spec.D, spec.U,
            spec.gb, spec.gd, spec.gnu, spec.tgnu, spec.tamper,
            _DUMMY_M, _DUMMY_I, _DUMMY_I, _DUMMY_F, 0,
            spec.moves, **common,
        )
    if isinstance(spec, FusionKernelSpec):
        return ck.run_chain_ext(
            ck.KIND_FUSION, z0,
            _DUMMY_M, _DUMMY_M, _DUMMY_M,
            0.0, spec.gd, spec.gnu, spec.tgnu, 0.0,
            spec.gMu, _pad1_i(spec.fi), _pad1_i(spec.fj), _pad1_f(spec.fprob),
            int(spec.fi.shape[0]),
            spec.moves, **common,
        )
    raise TypeError(f"unknown kernel spec {type(spec).__name__}")


def _field_args(fs):
    if isinstance(fs, ReplicatorField):
        return 0, fs.A, _DUMMY_M, 0.0
    if isinstance(fs, FusionField):
        return 1, fs.GF, fs.GMT, fs.gmu
    raise TypeError(f"unknown field spec {type(fs).__name__}")


def rk4_path(fs, x0, h, n_steps, stride=1, *, compiled: bool | None = None):
    use = USE_COMPILED if compiled is None else (compiled and _HAVE_EXT)
    if not use or callable(fs):
        return pk.rk4_path(fs, x0, h, n_steps, stride)
    kind, A, M2, gmu = _field_args(fs)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    return ck.rk4_path_ext(kind, A, M2, gmu, x0, float(h), int(n_steps), int(stride))


def flow_at_times(fs, x0, times, h, *, compiled: bool | None = None):
    use = USE_COMPILED if compiled is None else (compiled and _HAVE_EXT)
    times = np.ascontiguousarray(times, dtype=np.float64)
    if not use or callable(fs):
        return pk.flow_at_times(fs, x0, times, h)
    kind, A, M2, gmu = _field_args(fs)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    return ck.flow_at_times_ext(kind, A, M2, gmu, x0, times, float(h))
