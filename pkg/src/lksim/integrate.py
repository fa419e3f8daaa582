"""Adaptive Dormand-Prince 5(4) integration with dense output and freezing.

The stepping loop (:func:`dopri_loop`) is written in the subset of Python
that numba can compile.  When the right-hand side handed to :func:`integrate`
is a numba ``njit`` function (or a :class:`CompiledRHS`), the loop is compiled
with that kernel bound in; otherwise the very same source runs in the
interpreter.  Both routes share one implementation.

Right-hand sides have the signature ``rhs(t, y, args) -> dydt`` where ``args``
is an arbitrary tuple of parameters (it must be a tuple of arrays/scalars for
compiled right-hand sides).

Stiffness note: the model equations are oscillatory and only become locally
stiff where the smoothed Heaviside switches a population off.  Rather than an
implicit solver, watched components are *frozen* once they reach a threshold:
the step that crosses the threshold is shortened by secant interpolation until
the crossing lands within ``abs_tol``, the component is snapped to a fixed
value and its derivative is pinned to zero from then on.
"""
from __future__ import annotations

import functools
import inspect
import math
import types
import zlib
from dataclasses import dataclass, field

import numpy as np
from numba import njit

STATUS_COMPLETED = "completed"
STATUS_UNDERFLOW = "step_underflow"
STATUS_MAX_STEPS = "max_steps"
STATUS_EXTINCT = "extinct"

_STATUS_CODES = {
    0: STATUS_COMPLETED,
    1: STATUS_UNDERFLOW,
    2: STATUS_MAX_STEPS,
    3: STATUS_EXTINCT,
}

# Dormand-Prince 5(4) tableau and the free-c6 continuous extension.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200,
               -22 / 525, 1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA


class IntegrationError(RuntimeError):
    """Raised for unusable integrator input (not for in-run failures)."""


@dataclass(frozen=True)
class IntegratorSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    h_init: float | None = None
    h_min: float | None = None
    h_max: float | None = None
    output_samples: int = 2000
    max_steps: int = 50_000_000

    def resolved(self, t_final: float) -> tuple[float, float, float]:
        """Return concrete ``(h_init, h_min, h_max)`` for a run to ``t_final``."""
        h_min = self.h_min if self.h_min is not None else 1e-12 * t_final
        h_max = self.h_max if self.h_max is not None else t_final
        h_init = self.h_init if self.h_init is not None else 0.0
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise IntegrationError("tolerances must be positive")
        if not 0 < h_min <= h_max:
            raise IntegrationError(f"need 0 < h_min <= h_max, got {h_min}, {h_max}")
        if self.h_init is not None and not h_min <= h_init <= h_max:
            raise IntegrationError("h_init must lie in [h_min, h_max]")
        if self.output_samples < 2:
            raise IntegrationError("output_samples must be at least 2")
        return h_init, h_min, h_max


@dataclass(frozen=True)
class FreezeRule:
    """Components that latch to a fixed value once they fall to ``level``.

    ``watch[k]`` is tested against ``level``; when it freezes, ``watch[k]`` is
    set to ``snap`` and ``link[k]`` (if >= 0) is frozen at its current value.
    With ``stop_when_group_frozen`` the run ends as soon as every watched
    component sharing a ``group`` label is frozen.
    """

    watch: np.ndarray
    level: float
    link: np.ndarray | None = None
    group: np.ndarray | None = None
    snap: float = 0.0
    stop_when_group_frozen: bool = False

    def arrays(self):
        watch = np.asarray(self.watch, dtype=np.int64)
        link = (np.full(watch.size, -1, dtype=np.int64) if self.link is None
                else np.asarray(self.link, dtype=np.int64))
        group = (np.zeros(watch.size, dtype=np.int64) if self.group is None
                 else np.asarray(self.group, dtype=np.int64))
        if link.size != watch.size or group.size != watch.size:
            raise IntegrationError("watch, link and group must have equal length")
        return watch, link, group


_NO_FREEZE = FreezeRule(watch=np.zeros(0, dtype=np.int64), level=-np.inf)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    status: str
    t_end: float
    frozen: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def completed(self) -> bool:
        return self.status in (STATUS_COMPLETED, STATUS_EXTINCT)


@njit(cache=True)
def _apply_mask(f, frozen):
    for i in range(f.size):
        if frozen[i]:
            f[i] = 0.0
    return f


@njit(cache=True)
def _rms_norm(err, y, y_new, rtol, atol, skip):
    total = 0.0
    count = 0
    for i in range(err.size):
        if skip[i]:
            continue
        scale = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        r = err[i] / scale
        total += r * r
        count += 1
    if count == 0:
        return 0.0
    return math.sqrt(total / count)


def _loop_source(args, y0, cfg):
    # Template: ``_RHS`` is bound per right-hand side, see ``_bind_loop``.
    (t_out, t_final, rtol, atol, h_init, h_min, h_max, max_steps, watch, link,
     group, level, snap, stop_group, C, A, B, E, P) = cfg
    n = y0.size
    n_out = t_out.size
    ys = np.empty((n_out, n))
    frozen = np.zeros(n, dtype=np.bool_)
    n_watch = watch.size
    n_groups = 0
    for k in range(n_watch):
        if group[k] + 1 > n_groups:
            n_groups = group[k] + 1

    y = y0.copy()
    for k in range(n_watch):
        if y[watch[k]] <= level:
            y[watch[k]] = snap
            frozen[watch[k]] = True
            if link[k] >= 0:
                frozen[link[k]] = True

    K = np.empty((7, n))
    K[0] = _apply_mask(_RHS(0.0, y, args), frozen)
    nfev = 1
    if h_init > 0.0:
        h = h_init
    else:
        # starting step, Hairer & Wanner, Solving ODEs I, sec. II.4
        scale = atol + rtol * np.abs(y)
        d0 = math.sqrt(np.sum((y / scale) ** 2) / n)
        d1 = math.sqrt(np.sum((K[0] / scale) ** 2) / n)
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h0 = min(h0, h_max)
        f1 = _apply_mask(_RHS(h0, y + h0 * K[0], args), frozen)
        nfev += 1
        d2 = math.sqrt(np.sum(((f1 - K[0]) / scale) ** 2) / n) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        h = max(min(100 * h0, h1, h_max), h_min)

    t = 0.0
    out_i = 0
    while out_i < n_out and t_out[out_i] <= 0.0:
        ys[out_i] = y
        out_i += 1

    err_old = 1e-4
    rejected = False
    n_accept = 0
    n_reject = 0
    status = 0
    skip = np.zeros(n, dtype=np.bool_)
    y_stage = np.empty(n)

    while t < t_final:
        if n_accept + n_reject >= max_steps:
            status = 2
            break
        if h < h_min * (1.0 - 1e-12):
            status = 1
            break
        last = False
        if t + h >= t_final or t_final - (t + h) < h_min:
            h = t_final - t
            last = True

        for s in range(1, 6):
            y_stage[:] = y
            for j in range(s):
                a = A[s, j]
                if a != 0.0:
                    y_stage += (h * a) * K[j]
            K[s] = _apply_mask(_RHS(t + C[s] * h, y_stage, args), frozen)
        y_new = y.copy()
        for j in range(6):
            b = B[j]
            if b != 0.0:
                y_new += (h * b) * K[j]
        K[6] = _apply_mask(_RHS(t + h, y_new, args), frozen)
        nfev += 6

        # freeze-threshold crossings: shorten the step by secant interpolation
        h_cross = np.inf
        for i in range(n):
            skip[i] = frozen[i]
        for k in range(n_watch):
            w = watch[k]
            if frozen[w] or y_new[w] > level:
                continue
            skip[w] = True
            if y_new[w] < level - atol and y[w] > level:
                target = level - 0.5 * atol
                frac = (y[w] - target) / (y[w] - y_new[w])
                if frac * h < h_cross:
                    h_cross = frac * h
        if h_cross < np.inf and h_cross < h and h > h_min:
            h = max(h_cross, h_min)
            n_reject += 1
            rejected = True
            continue

        err_vec = np.zeros(n)
        for j in range(7):
            e = E[j]
            if e != 0.0:
                err_vec += (h * e) * K[j]
        err = _rms_norm(err_vec, y, y_new, rtol, atol, skip)

        if err > 1.0:
            fac = _SAFETY * err ** (-0.2)
            if fac < _FAC_MIN:
                fac = _FAC_MIN
            h = h * fac
            n_reject += 1
            rejected = True
            continue

        t_new = t_final if last else t + h
        # dense output on (t, t_new)
        if out_i < n_out and t_out[out_i] < t_new:
            Q = np.zeros((n, 4))
            for j in range(7):
                for m in range(4):
                    pj = P[j, m]
                    if pj != 0.0:
                        Q[:, m] += pj * K[j]
            while out_i < n_out and t_out[out_i] < t_new:
                theta = (t_out[out_i] - t) / h
                acc = np.zeros(n)
                power = theta
                for m in range(4):
                    acc += power * Q[:, m]
                    power *= theta
                ys[out_i] = y + h * acc
                out_i += 1

        y = y_new
        t = t_new
        n_accept += 1
        K[0] = K[6]

        froze_now = False
        for k in range(n_watch):
            w = watch[k]
            if not frozen[w] and y[w] <= level:
                y[w] = snap
                frozen[w] = True
                if link[k] >= 0:
                    frozen[link[k]] = True
                froze_now = True
        if froze_now:
            K[0] = _apply_mask(_RHS(t, y, args), frozen)
            nfev += 1

        while out_i < n_out and t_out[out_i] <= t:
            ys[out_i] = y
            out_i += 1

        if froze_now and stop_group and t < t_final:
            for g in range(n_groups):
                all_frozen = True
                members = 0
                for k in range(n_watch):
                    if group[k] == g:
                        members += 1
                        if not frozen[watch[k]]:
                            all_frozen = False
                if members > 0 and all_frozen:
                    status = 3
            if status == 3:
                break

        # PI step-size control
        fac = err ** _EXPO / err_old ** _BETA / _SAFETY if err > 0.0 else 1.0 / _FAC_MAX
        fac = min(1.0 / _FAC_MIN, max(1.0 / _FAC_MAX, fac))
        h_next = h / fac
        if rejected and h_next > h:
            h_next = h
        rejected = False
        err_old = max(err, 1e-4)
        h = min(h_next, h_max)

    return ys, out_i, status, t, y, frozen, n_accept, n_reject, nfev


def _bind_loop(rhs, name: str, jit: bool):
    namespace = dict(globals())
    namespace["_RHS"] = rhs
    if not jit:
        for helper in ("_apply_mask", "_rms_norm"):
            namespace[helper] = globals()[helper].py_func
    src = _loop_source
    fn = types.FunctionType(src.__code__, namespace, name, src.__defaults__)
    fn.__qualname__ = name
    return njit(cache=True)(fn) if jit else fn


class CompiledRHS:
    """A numba ``njit`` right-hand side together with its compiled loop.

    Build with :func:`compile_rhs`.  The loop is cached on disk under a name
    derived from the kernel and a hash of the file defining it, so editing
    the kernel's module invalidates the cached loop.
    """

    def __init__(self, kernel, loop):
        self.kernel = kernel
        self.loop = loop

    def __call__(self, t, y, args):
        return self.kernel(t, y, args)


@functools.lru_cache(maxsize=None)
def compile_rhs(kernel) -> CompiledRHS:
    py = kernel.py_func
    try:
        source = inspect.getsourcefile(py)
        with open(source, "rb") as fh:
            stamp = zlib.crc32(fh.read())
    except (OSError, TypeError):
        stamp = 0
    name = f"dopri_loop__{py.__module__.replace('.', '_')}__{py.__name__}__{stamp:08x}"
    return CompiledRHS(kernel, _bind_loop(kernel, name, jit=True))


def _is_jitted(fn) -> bool:
    return hasattr(fn, "py_func") and hasattr(fn, "signatures")


def output_grid(t_final: float, samples: int) -> np.ndarray:
    grid = np.linspace(0.0, t_final, samples)
    grid[-1] = t_final
    return grid


def integrate_with_freeze(rhs, freeze: FreezeRule | None, y0, t_final: float,
                          settings: IntegratorSettings | None = None,
                          args: tuple = (),
                          t_out: np.ndarray | None = None) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y, args)`` from 0 to ``t_final``.

    Components named by ``freeze`` are latched once they reach the freeze
    level; their derivative is zero from that step on.  In-run failures
    (step underflow, step budget) come back in ``Trajectory.status`` together
    with the samples produced up to the failure time.
    """
    settings = settings or IntegratorSettings()
    if not t_final > 0:
        raise IntegrationError("t_final must be positive")
    h_init, h_min, h_max = settings.resolved(t_final)
    freeze = freeze or _NO_FREEZE
    watch, link, group = freeze.arrays()
    y0 = np.array(y0, dtype=np.float64).ravel()
    if t_out is None:
        t_out = output_grid(t_final, settings.output_samples)
    t_out = np.asarray(t_out, dtype=np.float64)
    if t_out.size and (np.any(np.diff(t_out) <= 0) or t_out[0] < 0 or t_out[-1] > t_final):
        raise IntegrationError("output times must be strictly increasing within [0, t_final]")
    if watch.size and (watch.min() < 0 or watch.max() >= y0.size):
        raise IntegrationError("freeze index out of range")

    cfg = (t_out, float(t_final), float(settings.rel_tol), float(settings.abs_tol),
           float(h_init), float(h_min), float(h_max), int(settings.max_steps),
           watch, link, group, float(freeze.level), float(freeze.snap),
           bool(freeze.stop_when_group_frozen), _C, _A, _B, _E, _P)
    if _is_jitted(rhs):
        rhs = compile_rhs(rhs)
    if isinstance(rhs, CompiledRHS):
        result = rhs.loop(args, y0, cfg)
    else:
        def fn(t, y, a, _rhs=rhs):
            return np.array(_rhs(t, y, a), dtype=np.float64)

        result = _bind_loop(fn, "dopri_loop_py", jit=False)(args, y0, cfg)
    ys, n_done, code, t_end, y_end, frozen, n_acc, n_rej, nfev = result

    times = t_out[:n_done].copy()
    states = ys[:n_done].copy()
    if n_done == 0 or times[-1] < t_end:
        times = np.append(times, t_end)
        states = np.vstack([states, y_end[None, :]])
    return Trajectory(
        times=times, states=states, status=_STATUS_CODES[int(code)],
        t_end=float(t_end), frozen=np.asarray(frozen, dtype=bool),
        stats={"accepted": int(n_acc), "rejected": int(n_rej), "nfev": int(nfev)},
    )


def integrate(rhs, y0, t_final: float, settings: IntegratorSettings | None = None,
              args: tuple = (), t_out: np.ndarray | None = None) -> Trajectory:
    """Plain adaptive integration (no freezing)."""
    return integrate_with_freeze(rhs, None, y0, t_final, settings, args, t_out)

