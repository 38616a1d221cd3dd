"""Limit-cycle detection via Poincare return maps and Hopf bifurcation scans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .integrate import IntegratorOptions, Trajectory, hermite_eval
from .phase2d import Model2D, find_equilibria_2d, integrate_trajectory, jacobian_at

__all__ = [
    "CycleOptions", "CycleReport", "HopfResult", "ContinuationError",
    "detect_limit_cycle", "hopf_scan",
    "STABLE", "UNSTABLE", "NEUTRAL",
]

STABLE = "stable"
UNSTABLE = "unstable"
NEUTRAL = "neutral"


class ContinuationError(RuntimeError):
    def __init__(self, message: str, last_param: float, path):
        super().__init__(message)
        self.last_param = last_param
        self.path = path


@dataclass
class CycleOptions:
    probe_offset_frac: float = 0.1     # first probe: this fraction of domain width along +x
    transient_time: float = 200.0      # transient ends after this time...
    transient_returns: int = 20        # ...or this many section returns
    max_time: float = 2000.0
    max_returns: int = 400
    converge_rel: float = 1e-6         # |r_{n+1} - r_n| <= rel * r_n ...
    converge_count: int = 3            # ... for this many consecutive returns
    min_radius_frac: float = 1e-3      # of the domain diagonal; below it = equilibrium
    agreement_rel: float = 1e-3        # two-sided radius agreement for a true cycle
    # tight tolerances: the 1e-6 relative contraction test needs return radii
    # whose numerical noise sits well below it
    rtol: float = 1e-10
    atol: float = 1e-12


@dataclass
class CycleReport:
    found: bool
    stability: str | None = None       # STABLE | UNSTABLE | NEUTRAL | None
    reason: str = ""
    orbit: Trajectory | None = None    # one period, when found
    period: float | None = None
    amplitude: float | None = None
    section_radius: float | None = None
    radii: tuple[float, ...] = ()      # post-transient return radii (diagnostic)


@dataclass
class _ProbeResult:
    outcome: str                       # "converged" | "equilibrium" | "left" | "budget" | "no_returns"
    radii: list[float] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    crossing: tuple[float, float] | None = None
    period: float | None = None


def _section_crossings(traj: Trajectory, eq: tuple[float, float], direction: list):
    """Crossings of the half-line {y = y*, x > x*} with a fixed dy/dt sign.

    ``direction`` is a one-element mutable cell so the first observed
    crossing direction is remembered across integration chunks.
    """
    x_star, y_star = eq
    out = []
    ts, states, derivs = traj.ts, traj.states, traj.derivs
    for k in range(len(ts) - 1):
        w0 = states[k, 1] - y_star
        w1 = states[k + 1, 1] - y_star
        if w0 == 0.0 or w0 * w1 > 0.0:
            continue
        up = w1 > w0
        if direction[0] is None:
            # fix the crossing direction on the first return right of x*
            pass
        elif up != direction[0]:
            continue
        # refine with cubic Hermite interpolation of the step
        t0, t1 = ts[k], ts[k + 1]
        y0, y1 = states[k], states[k + 1]
        f0, f1 = derivs[k], derivs[k + 1]
        lo, hi = t0, t1
        wlo = w0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            wm = hermite_eval(t0, y0[1], f0[1], t1, y1[1], f1[1], mid) - y_star
            if (wm > 0) == (wlo > 0):
                lo, wlo = mid, wm
            else:
                hi = mid
        tc = 0.5 * (lo + hi)
        xc = float(hermite_eval(t0, y0[0], f0[0], t1, y1[0], f1[0], tc))
        if xc <= x_star:
            continue
        if direction[0] is None:
            direction[0] = up
        out.append((float(tc), xc - x_star))
    return out


def _run_probe(m: Model2D, eq: tuple[float, float], start: tuple[float, float],
               opts: CycleOptions) -> _ProbeResult:
    """Integrate from ``start`` and classify the tail of the return-radius sequence."""
    min_radius = opts.min_radius_frac * m.diagonal
    direction = [None]
    crossings: list[tuple[float, float]] = []
    integ = IntegratorOptions(rtol=opts.rtol, atol=opts.atol)
    state = np.asarray(start, dtype=float)
    t_base = 0.0
    chunk = max(10.0, opts.transient_time / 4.0)

    while t_base < opts.max_time:
        traj = integrate_trajectory(m, tuple(state), min(chunk, opts.max_time - t_base), integ)
        for tc, r in _section_crossings(traj, eq, direction):
            crossings.append((t_base + tc, r))
        t_base += traj.ts[-1]
        state = traj.states[-1]

        if traj.reason == "domain_exit":
            return _ProbeResult("left", *_tail(crossings, opts))
        if traj.reason == "step_underflow":
            return _ProbeResult("budget", *_tail(crossings, opts))
        if math.hypot(state[0] - eq[0], state[1] - eq[1]) < min_radius:
            return _ProbeResult("equilibrium", *_tail(crossings, opts))

        radii, times = _tail(crossings, opts)
        n = opts.converge_count
        if len(radii) > n:
            last = radii[-(n + 1):]
            if all(abs(last[i + 1] - last[i]) <= opts.converge_rel * abs(last[i]) for i in range(n)) \
                    and last[-1] >= min_radius:
                x_star, y_star = eq
                return _ProbeResult(
                    "converged", radii, times,
                    crossing=(x_star + last[-1], y_star),
                    period=times[-1] - times[-2],
                )
        if len(crossings) >= opts.max_returns:
            return _ProbeResult("budget", radii, times)
    radii, times = _tail(crossings, opts)
    return _ProbeResult("budget" if crossings else "no_returns", radii, times)


def _tail(crossings, opts: CycleOptions):
    """Post-transient (radii, times): drop returns before the transient budget ends."""
    cut = 0
    for k, (t, _) in enumerate(crossings):
        if t >= opts.transient_time or k >= opts.transient_returns:
            cut = k
            break
    else:
        cut = len(crossings)
    kept = crossings[cut:]
    return [r for _, r in kept], [t for t, _ in kept]


def _neutralish(radii: list[float]) -> bool:
    """Bounded, non-drifting radii: the center-like signature."""
    if len(radii) < 6:
        return False
    a = np.asarray(radii)
    half = len(a) // 2
    drift = abs(float(a[half:].mean() - a[:half].mean()))
    return drift <= 1e-3 * float(a.mean()) and float(a.std()) <= 0.05 * float(a.mean())


def _reversed_model(m: Model2D) -> Model2D:
    from .expr import Neg
    return Model2D(Neg(m.f), Neg(m.g), m.x_name, m.y_name, dict(m.params),
                   m.x_lo, m.x_hi, m.y_lo, m.y_hi, m.name + "(time-reversed)")


def detect_limit_cycle(
    m: Model2D,
    interior_eq: tuple[float, float],
    options: CycleOptions | None = None,
    _allow_reversal: bool = True,
) -> CycleReport:
    """Search for a limit cycle around ``interior_eq``.

    A first probe starts a little away from the equilibrium and its returns
    to the Poincare half-line {y = y*, x > x*} are recorded.  A cycle is
    accepted as stable only if the return radii contract to a limit from
    both sides (a second probe launched on the other side of the candidate
    radius must agree); a center's closed orbits fail that test and report
    as neutral.  When the forward probes collapse onto the equilibrium or
    leave the domain, the time-reversed system is searched once for an
    unstable cycle.  Budgets are finite: exhausting them is a negative
    result, not an error.
    """
    opts = options or CycleOptions()
    x_star, y_star = interior_eq

    offset = opts.probe_offset_frac * (m.x_hi - m.x_lo)
    x_start = min(x_star + offset, m.x_hi - 1e-9 * m.diagonal)
    first = _run_probe(m, interior_eq, (x_start, y_star), opts)

    if first.outcome == "converged":
        r1 = first.radii[-1]
        r0 = x_start - x_star
        if r0 <= r1:
            x2 = min(x_star + 1.5 * r1, m.x_hi - 1e-9 * m.diagonal)
        else:
            x2 = x_star + 0.5 * r1
        second = _run_probe(m, interior_eq, (x2, y_star), opts)
        if second.outcome == "converged" \
                and abs(second.radii[-1] - r1) <= opts.agreement_rel * r1:
            orbit = integrate_trajectory(
                m, first.crossing, first.period,
                IntegratorOptions(rtol=opts.rtol, atol=opts.atol),
            )
            amp = float(np.max(np.hypot(orbit.xs - x_star, orbit.ys - y_star)))
            return CycleReport(
                found=True, stability=STABLE, reason="two-sided return-map contraction",
                orbit=orbit, period=first.period, amplitude=amp,
                section_radius=r1, radii=tuple(first.radii),
            )
        if second.outcome == "converged":
            return CycleReport(
                found=False, stability=NEUTRAL,
                reason="return radii depend on the start point (center-like orbit family)",
                section_radius=r1, radii=tuple(first.radii),
            )
        return CycleReport(
            found=False, reason=f"second probe did not converge ({second.outcome})",
            section_radius=r1, radii=tuple(first.radii),
        )

    if first.outcome == "equilibrium":
        report = CycleReport(found=False, reason="orbit converges to the interior equilibrium",
                             radii=tuple(first.radii))
    elif first.outcome == "left":
        report = CycleReport(found=False, reason="orbit leaves the domain",
                             radii=tuple(first.radii))
    elif first.outcome == "no_returns":
        report = CycleReport(found=False, reason="no section returns within budget",
                             radii=tuple(first.radii))
    else:
        if _neutralish(first.radii):
            return CycleReport(found=False, stability=NEUTRAL,
                               reason="radii bounded and non-drifting without contraction",
                               radii=tuple(first.radii))
        report = CycleReport(found=False, reason="return budget exhausted without convergence",
                             radii=tuple(first.radii))

    if _allow_reversal and first.outcome in ("equilibrium", "left"):
        rev = detect_limit_cycle(_reversed_model(m), interior_eq, opts, _allow_reversal=False)
        if rev.found:
            return CycleReport(
                found=True, stability=UNSTABLE,
                reason="stable cycle of the time-reversed flow",
                orbit=rev.orbit, period=rev.period, amplitude=rev.amplitude,
                section_radius=rev.section_radius, radii=rev.radii,
            )
    return report


# ---------------------------------------------------------------------------
# Hopf continuation


@dataclass(frozen=True)
class HopfResult:
    critical: float
    det_at_critical: float
    equilibrium_at_critical: tuple[float, float]
    bracket: tuple[float, float]
    path: tuple[tuple[float, tuple[float, float], float, float], ...]  # (param, eq, tr, det)


def _track_equilibrium(m: Model2D, param: str, value: float,
                       guess: tuple[float, float]) -> tuple[float, float] | None:
    from .phase2d import _newton_polish
    mp = m.with_param(param, value)
    res = _newton_polish(mp, guess[0], guess[1], 1e-11 * mp.scale())
    return res


def hopf_scan(
    m: Model2D,
    param: str,
    p_range: tuple[float, float],
    steps: int,
    start_eq: tuple[float, float] | None = None,
) -> HopfResult | None:
    """Locate tr J = 0 (with det J > 0) along an equilibrium branch.

    The equilibrium is re-found at each parameter step by Newton seeded from
    the previous location; a trace sign change with positive determinant at
    both ends is bisected to |dp| <= 1e-8 of the range width.  Returns None
    when the trace never changes sign; raises ContinuationError when the
    branch is lost.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    p_lo, p_hi = p_range
    width = abs(p_hi - p_lo)

    if start_eq is None:
        eqs = find_equilibria_2d(m.with_param(param, p_lo))
        if not eqs:
            raise ValueError(f"no equilibrium in the domain at {param}={p_lo!r}")
        # prefer an oscillation-capable branch: positive determinant
        def det_of(e):
            return jacobian_at(m.with_param(param, p_lo), e).det
        start_eq = max(eqs, key=det_of)

    path = []
    eq = start_eq
    for p in np.linspace(p_lo, p_hi, steps):
        eq = _track_equilibrium(m, param, float(p), eq)
        if eq is None:
            raise ContinuationError(
                f"equilibrium branch lost at {param}={p!r}",
                last_param=path[-1][0] if path else p_lo, path=tuple(path),
            )
        jac = jacobian_at(m.with_param(param, float(p)), eq)
        path.append((float(p), (float(eq[0]), float(eq[1])), float(jac.tr), float(jac.det)))

    hit = next(
        (
            k for k in range(len(path) - 1)
            if path[k][2] * path[k + 1][2] < 0.0 and path[k][3] > 0.0 and path[k + 1][3] > 0.0
        ),
        None,
    )
    if hit is None:
        return None

    (pa, eqa, tra, _), (pb, eqb, _, _) = path[hit], path[hit + 1]
    while abs(pb - pa) > 1e-8 * width:
        pm = 0.5 * (pa + pb)
        eqm = _track_equilibrium(m, param, pm, eqa)
        if eqm is None:
            raise ContinuationError(f"equilibrium branch lost at {param}={pm!r}",
                                    last_param=pa, path=tuple(path))
        trm = jacobian_at(m.with_param(param, pm), eqm).tr
        if trm * tra > 0.0:
            pa, eqa, tra = pm, eqm, trm
        else:
            pb, eqb = pm, eqm
    critical = float(0.5 * (pa + pb))
    eqc = _track_equilibrium(m, param, critical, eqa) or eqa
    detc = jacobian_at(m.with_param(param, critical), eqc).det
    return HopfResult(
        critical=critical, det_at_critical=float(detc),
        equilibrium_at_critical=(float(eqc[0]), float(eqc[1])),
        bracket=(float(pa), float(pb)), path=tuple(path),
    )
