"""Explicit adaptive Dormand-Prince 5(4) integration with dense step output."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["IntegratorOptions", "Trajectory", "StepUnderflowError", "integrate"]

# Butcher tableau, Dormand & Prince order 5(4)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


class StepUnderflowError(RuntimeError):
    """Step size collapsed below the resolvable scale (stiffness signal)."""


@dataclass
class IntegratorOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf       # also bounds the output sample spacing
    first_step: float | None = None
    max_steps: int = 1_000_000


@dataclass
class Trajectory:
    """Accepted integration samples plus integrator metadata."""
    ts: np.ndarray                 # strictly increasing times
    states: np.ndarray             # shape (len(ts), ndim)
    method: str = "dormand-prince-5(4)"
    n_accepted: int = 0
    n_rejected: int = 0
    reason: str = "t_end"          # "t_end" | "domain_exit" | "step_underflow"
    exit_time: float | None = None
    derivs: np.ndarray = field(default=None, repr=False)  # f at each sample

    @property
    def xs(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.states[:, 1]


def _initial_step(f, t0, y0, f0, t_end, opts: IntegratorOptions) -> float:
    scale = opts.atol + opts.rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h0, abs(t_end - t0), opts.max_step)


def integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_end: float,
    options: IntegratorOptions | None = None,
    in_domain: Callable[[np.ndarray], bool] | None = None,
    raise_on_underflow: bool = False,
) -> Trajectory:
    """Integrate dy/dt = f(t, y) from t=0 to ``t_end``, recording every accepted step.

    Stops early when ``in_domain`` rejects a step endpoint (reason
    ``domain_exit``, exit time recorded) or when the error controller drives
    the step below ~1e-14 of the time scale (``step_underflow``; raises
    instead when ``raise_on_underflow``).
    """
    opts = options or IntegratorOptions()
    y = np.asarray(y0, dtype=float).copy()
    t = 0.0
    k1 = np.asarray(f(t, y), dtype=float)
    h = opts.first_step or _initial_step(f, t, y, k1, t_end, opts)

    ts = [t]
    states = [y.copy()]
    derivs = [k1.copy()]
    n_acc = n_rej = 0
    reason = "t_end"
    exit_time = None
    k = [np.zeros_like(y) for _ in range(7)]

    for _ in range(opts.max_steps):
        if t >= t_end:
            break
        h = min(h, opts.max_step, t_end - t)
        if h < 1e-14 * max(1.0, abs(t)):
            if raise_on_underflow:
                raise StepUnderflowError(f"step underflow at t={t!r}")
            reason = "step_underflow"
            break

        k[0] = k1
        for s in range(1, 7):
            ys = y + h * sum(a * k[j] for j, a in enumerate(_A[s]))
            k[s] = np.asarray(f(t + _C[s] * h, ys), dtype=float)
        y_new = y + h * sum(b * k[j] for j, b in enumerate(_B5) if b != 0.0)
        err_vec = h * sum(e * k[j] for j, e in enumerate(_E) if e != 0.0)
        scale = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if not np.isfinite(err):
            n_rej += 1
            h *= 0.1
            continue
        if err <= 1.0:
            t_prev, y_prev, f_prev = t, y, k[0]
            t += h
            y = y_new
            k1 = k[6]  # FSAL: last stage is f at the new point
            n_acc += 1
            if in_domain is not None and not in_domain(y):
                # bisect the step for the boundary crossing time
                lo, hi = t_prev, t
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    y_mid = hermite_eval(t_prev, y_prev, f_prev, t, y, k1, mid)
                    if in_domain(y_mid):
                        lo = mid
                    else:
                        hi = mid
                reason = "domain_exit"
                exit_time = hi
                ts.append(hi)
                states.append(hermite_eval(t_prev, y_prev, f_prev, t, y, k1, hi))
                derivs.append(k1.copy())
                break
            ts.append(t)
            states.append(y.copy())
            derivs.append(k1.copy())
        else:
            n_rej += 1
        factor = 0.9 * (err or 1e-16) ** -0.2
        h *= min(5.0, max(0.2, factor))
    else:
        reason = "step_budget"

    return Trajectory(
        ts=np.asarray(ts), states=np.asarray(states), derivs=np.asarray(derivs),
        n_accepted=n_acc, n_rejected=n_rej, reason=reason, exit_time=exit_time,
    )


def hermite_eval(t0, y0, f0, t1, y1, f1, t):
    """Cubic Hermite interpolation of a step (used for section crossings)."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
