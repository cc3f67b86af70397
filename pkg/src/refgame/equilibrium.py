"""Equilibrium solvers: best responses, the per-period equilibrium
pricing policy, and the stationary point where that policy reproduces
its own reference price.

The stationary equilibrium ``p**`` solves

    p_i = 1 / ((b_i + c_i) * (1 - d_i(p, p)))      for i in {H, L},

i.e. the first-order conditions of the one-shot game evaluated with
references equal to prices. It is unique, and each component is pinned
between 1/(b_i+c_i) and an explicit Lambert-W expression; those bounds
double as the admissibility thresholds for the price box.

Solvers here are deterministic and derivative-aware: the single-firm
best response exploits that the log-revenue derivative is strictly
decreasing in the own price (safeguarded Newton in a sign bracket), the
policy solver alternates best responses, and the stationary solver runs
a damped fixed-point iteration with a geometric damping ladder. Damping
matters: the undamped map has Jacobian entries of size roughly
b_i * d_i / ((b_i+c_i) * (1 - d_i)) at the fixed point, which is far
above 1 whenever demand saturates, so the ladder keeps halving the step
until the iteration contracts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis
from .dynamics import Trajectory, reference_update
from .model import MarketParams, PricePair, _consts, _demands_fast

__all__ = [
    "SolverError",
    "SolverConfig",
    "BoxCheck",
    "SneSolution",
    "lambert_w",
    "sne_bounds",
    "validate_price_box",
    "best_response",
    "equilibrium_policy",
    "solve_sne",
    "equilibrium_path",
]


class SolverError(RuntimeError):
    """An iterative solver failed to meet its tolerance.

    Carries whatever context the failing solver had: the last bracket
    for root finders, the period index for path solvers, the final
    residual for fixed-point loops.
    """

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver knobs.

    ``tolerance`` is the fixed-point / root residual target,
    ``max_iterations`` caps every inner loop, and ``damping`` in (0, 1]
    is the first rung of the stationary solver's damping ladder.
    """

    tolerance: float = 1e-12
    max_iterations: int = 100_000
    damping: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tolerance) and self.tolerance > 0.0):
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")


@dataclass(frozen=True)
class BoxCheck:
    """Outcome of the price-box admissibility test.

    The box is admissible when ``p_lo <= lower_threshold`` (the smaller
    of the two component lower bounds) and ``p_hi >= upper_threshold``
    (the larger of the two component upper bounds).
    """

    ok: bool
    lower_ok: bool
    upper_ok: bool
    lower_threshold: float
    upper_threshold: float

    def describe(self) -> str:
        if self.ok:
            return (
                f"price box admissible (p_lo <= {self.lower_threshold:.6g}, "
                f"p_hi >= {self.upper_threshold:.6g})"
            )
        parts = []
        if not self.lower_ok:
            parts.append(f"p_lo must be <= {self.lower_threshold:.6g}")
        if not self.upper_ok:
            parts.append(f"p_hi must be >= {self.upper_threshold:.6g}")
        return "price box inadmissible: " + "; ".join(parts)


@dataclass(frozen=True)
class SneSolution:
    """A solved stationary equilibrium with its certificates.

    ``bounds`` holds the per-firm (lower, upper) analytic bounds, and
    ``hessian_certificate`` the (det, trace, min eigenvalue) of the
    local-potential Hessian at the solution; positive det and trace
    certify the local quadratic growth the rate theory relies on.
    """

    prices: PricePair
    residual: float
    iterations: int
    bounds: tuple[tuple[float, float], tuple[float, float]]
    hessian_certificate: tuple[float, float, float]


def lambert_w(x: float, tol: float = 1e-12, max_iter: int = 100) -> float:
    """Principal-branch Lambert W on [0, inf): the w >= 0 with w*e^w = x.

    Halley iteration from w0 = log(1 + x), switched to the asymptotic
    seed w0 = log(x) - log(log(x)) for x > e. The result satisfies
    |w*e^w - x| <= tol * max(1, x).
    """
    if not (isinstance(x, (int, float)) and math.isfinite(x)):
        raise ValueError(f"lambert_w needs a finite argument, got {x!r}")
    if x < 0.0:
        raise ValueError(f"lambert_w is restricted to x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    w = math.log1p(x) if x <= math.e else math.log(x) - math.log(math.log(x))
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol * max(1.0, x):
            return w
        wp1 = w + 1.0
        w -= f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
    raise SolverError("lambert_w failed to converge", x=x, w=w)


def sne_bounds(params: MarketParams) -> tuple[tuple[float, float], tuple[float, float]]:
    """Per-firm (lower, upper) bounds that bracket the stationary prices.

    lower_i = 1/(b_i+c_i); upper_i adds W(k*exp(a_i - k))/b_i with
    k = b_i/(b_i+c_i). Both are strict for the true solution.
    """
    out = []
    for firm in params.firms:
        s = firm.b + firm.c
        lower = 1.0 / s
        k = firm.b / s
        upper = lower + lambert_w(k * math.exp(firm.a - k)) / firm.b
        out.append((lower, upper))
    return (out[0], out[1])


def validate_price_box(params: MarketParams) -> BoxCheck:
    """Check that [p_lo, p_hi] is wide enough to contain the stationary point.

    Passes iff p_lo is at most the smaller component lower bound and
    p_hi at least the larger component upper bound.
    """
    (lo_H, up_H), (lo_L, up_L) = sne_bounds(params)
    lower_threshold = min(lo_H, lo_L)
    upper_threshold = max(up_H, up_L)
    lower_ok = params.p_lo <= lower_threshold
    upper_ok = params.p_hi >= upper_threshold
    return BoxCheck(
        ok=lower_ok and upper_ok,
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        lower_threshold=lower_threshold,
        upper_threshold=upper_threshold,
    )


def _own_derivative(consts, firm: str, p_own: float, p_other: float, r: PricePair):
    """(D_i, dD_i/dp_i) for one firm at the assembled state."""
    if firm == "H":
        d_H, d_L = _demands_fast(consts, p_own, p_other, r[0], r[1])
        s = consts[1]
        d = d_H
    else:
        d_H, d_L = _demands_fast(consts, p_other, p_own, r[0], r[1])
        s = consts[4]
        d = d_L
    D = 1.0 / p_own + s * (d - 1.0)
    dD = -1.0 / (p_own * p_own) - s * s * d * (1.0 - d)
    return D, dD


def best_response(
    params: MarketParams,
    firm: str,
    opponent_price: float,
    r: PricePair,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """Revenue-maximizing price of one firm against a fixed opponent.

    The log-revenue derivative D_i is strictly decreasing in the own
    price, so the maximizer over the box is the unique sign change of
    D_i when one exists, otherwise the boundary where D_i points: p_lo
    when D_i(p_lo) <= 0, p_hi when D_i(p_hi) >= 0. Interior roots are
    located with Newton steps safeguarded by the sign bracket, to
    |D_i| <= cfg.tolerance.
    """
    if firm not in ("H", "L"):
        raise ValueError(f"firm must be 'H' or 'L', got {firm!r}")
    if not params.in_box(opponent_price, r[0], r[1]):
        raise ValueError("opponent price and references must lie in the price box")
    consts = _consts(params)
    lo, hi = params.p_lo, params.p_hi

    f_lo, _ = _own_derivative(consts, firm, lo, opponent_price, r)
    if f_lo <= 0.0:
        return lo
    f_hi, _ = _own_derivative(consts, firm, hi, opponent_price, r)
    if f_hi >= 0.0:
        return hi

    x = 0.5 * (lo + hi)
    for _ in range(cfg.max_iterations):
        f, df = _own_derivative(consts, firm, x, opponent_price, r)
        if abs(f) <= cfg.tolerance:
            return x
        if f > 0.0:
            lo = x
        else:
            hi = x
        step = x - f / df
        x = step if lo < step < hi else 0.5 * (lo + hi)
    raise SolverError(
        "best_response failed to converge",
        firm=firm,
        bracket=(lo, hi),
        last=x,
    )


def equilibrium_policy(
    params: MarketParams,
    r: PricePair,
    cfg: SolverConfig = SolverConfig(),
    start: PricePair | None = None,
) -> PricePair:
    """One-shot equilibrium prices p*(r) for fixed references.

    Alternates exact best responses and then verifies the stationarity
    system p_i = 1/((b_i+c_i)(1 - d_i)) to within 10 * cfg.tolerance.
    That residual is measured in price units while best responses
    terminate on the derivative, which shrinks by roughly p^2 when
    converted; the inner tolerance is tightened accordingly (floored
    near float noise). Components clamped at a box edge are exempt from
    the residual check (there the maximizer legitimately sits on the
    boundary). ``start`` warm-starts the alternation; the fixed point
    does not depend on it.
    """
    if not params.in_box(r[0], r[1]):
        raise ValueError("references must lie in the price box")
    scale = max(1.0, params.p_hi * params.p_hi)
    inner = SolverConfig(
        tolerance=max(cfg.tolerance / scale, 1e-15),
        max_iterations=cfg.max_iterations,
        damping=cfg.damping,
    )
    mid = 0.5 * (params.p_lo + params.p_hi)
    p_H, p_L = (float(start[0]), float(start[1])) if start is not None else (mid, mid)
    # the alternation can dither by one ulp of the price scale forever,
    # so the stopping threshold never drops below a few ulps of p_hi
    stop_tol = max(inner.tolerance, 8.0 * math.ulp(params.p_hi))
    converged = False
    for _ in range(cfg.max_iterations):
        new_H = best_response(params, "H", p_L, r, inner)
        new_L = best_response(params, "L", new_H, r, inner)
        change = max(abs(new_H - p_H), abs(new_L - p_L))
        p_H, p_L = new_H, new_L
        if change <= stop_tol:
            converged = True
            break
    if not converged:
        raise SolverError("equilibrium_policy failed to converge", last=(p_H, p_L))

    consts = _consts(params)
    d_H, d_L = _demands_fast(consts, p_H, p_L, r[0], r[1])
    res_H = abs(p_H - 1.0 / (consts[1] * (1.0 - d_H)))
    res_L = abs(p_L - 1.0 / (consts[4] * (1.0 - d_L)))
    interior_H = params.p_lo < p_H < params.p_hi
    interior_L = params.p_lo < p_L < params.p_hi
    residual = max(res_H if interior_H else 0.0, res_L if interior_L else 0.0)
    if residual > 10.0 * cfg.tolerance:
        raise SolverError(
            "equilibrium_policy residual above tolerance",
            residual=residual,
            prices=(p_H, p_L),
        )
    return PricePair(p_H, p_L)


# Damping ladder floor and stagnation window for the stationary solver.
_DAMPING_FLOOR = 2.0**-10
_STAGNATION_WINDOW = 500


def solve_sne(params: MarketParams, cfg: SolverConfig = SolverConfig()) -> SneSolution:
    """Solve the stationary equilibrium by damped fixed-point iteration.

    Iterates p <- (1 - delta) p + delta T(p) from the box midpoint,
    where T_i(p) = 1/((b_i+c_i)(1 - d_i(p, p))), clipped to the box.
    The residual is the sup-norm defect |p - T(p)|. When a damping rung
    stagnates (no 1% improvement of the best residual across a
    500-iteration window) or exhausts cfg.max_iterations, the ladder
    halves delta, starting from cfg.damping and retrying at 0.5, 0.25,
    ... down to 2^-10 before giving up. The returned solution carries
    the analytic bounds and the local Hessian certificate.
    """
    check = validate_price_box(params)
    if not check.ok:
        raise ValueError(check.describe())

    consts = _consts(params)
    s_H, s_L = consts[1], consts[4]
    lo, hi = params.p_lo, params.p_hi
    mid = 0.5 * (lo + hi)

    ladder = [cfg.damping]
    if cfg.damping > 0.5:
        ladder.append(0.5)
    while ladder[-1] > _DAMPING_FLOOR:
        ladder.append(ladder[-1] * 0.5)

    total_iters = 0
    solution = None
    for delta in ladder:
        x = y = mid
        best = math.inf
        checkpoint = math.inf
        stalled = False
        for it in range(cfg.max_iterations):
            d_H, d_L = _demands_fast(consts, x, y, x, y)
            t_x = 1.0 / (s_H * (1.0 - d_H))
            t_y = 1.0 / (s_L * (1.0 - d_L))
            res = max(abs(x - t_x), abs(y - t_y))
            if res <= cfg.tolerance:
                total_iters += it + 1
                solution = (x, y, res)
                break
            if res < best:
                best = res
            if (it + 1) % _STAGNATION_WINDOW == 0:
                if best > 0.99 * checkpoint:
                    stalled = True
                    break
                checkpoint = best
            x = min(max((1.0 - delta) * x + delta * t_x, lo), hi)
            y = min(max((1.0 - delta) * y + delta * t_y, lo), hi)
        if solution is not None:
            break
        total_iters += (it + 1) if stalled else cfg.max_iterations
    if solution is None:
        raise SolverError(
            "stationary equilibrium solver exhausted its damping ladder",
            iterations=total_iters,
            ladder=ladder,
        )

    p_H, p_L, residual = solution
    prices = PricePair(p_H, p_L)
    bounds = sne_bounds(params)
    for value, (lower, upper) in zip(prices, bounds):
        if not (lower < value < upper):
            raise SolverError(
                "solved stationary prices violate their analytic bounds",
                prices=tuple(prices),
                bounds=bounds,
            )
    cert = analysis.hessian_certificate(params, prices)
    if not (cert.det > 0.0 and cert.trace > 0.0):
        raise SolverError(
            "Hessian certificate is not positive definite at the solution",
            det=cert.det,
            trace=cert.trace,
        )
    return SneSolution(
        prices=prices,
        residual=residual,
        iterations=total_iters,
        bounds=bounds,
        hessian_certificate=(cert.det, cert.trace, cert.min_eig),
    )


def equilibrium_path(
    params: MarketParams,
    r0: PricePair,
    horizon: int,
    cfg: SolverConfig = SolverConfig(),
) -> Trajectory:
    """Full-information baseline: play p*(r_t) each period, smooth references.

    Returns a trajectory in the same layout as the learning simulator
    (the eta column is zero; no step size is involved). Each period's
    policy solve is warm-started from the previous one. Solver failures
    are re-raised with the offending period attached.
    """
    if not isinstance(horizon, int) or horizon < 1:
        raise ValueError(f"horizon must be an integer >= 1, got {horizon!r}")
    r_H, r_L = float(r0[0]), float(r0[1])
    if not params.in_box(r_H, r_L):
        raise ValueError("initial references must lie in the price box")

    consts = _consts(params)
    s_H, s_L = consts[1], consts[4]
    n = horizon + 1
    arr_pH = np.empty(n)
    arr_pL = np.empty(n)
    arr_rH = np.empty(n)
    arr_rL = np.empty(n)
    arr_DH = np.empty(n)
    arr_DL = np.empty(n)

    guess: PricePair | None = None
    for t in range(n):
        try:
            p = equilibrium_policy(params, PricePair(r_H, r_L), cfg, start=guess)
        except SolverError as err:
            raise SolverError(
                f"equilibrium_path failed at period {t}: {err}",
                period=t,
                **err.context,
            ) from err
        guess = p
        d_H, d_L = _demands_fast(consts, p.p_H, p.p_L, r_H, r_L)
        arr_pH[t] = p.p_H
        arr_pL[t] = p.p_L
        arr_rH[t] = r_H
        arr_rL[t] = r_L
        arr_DH[t] = 1.0 / p.p_H + s_H * (d_H - 1.0)
        arr_DL[t] = 1.0 / p.p_L + s_L * (d_L - 1.0)
        if t < horizon:
            r_H, r_L = reference_update(params.alpha, PricePair(r_H, r_L), p)

    return Trajectory(
        params=params,
        schedule="equilibrium-policy",
        p_H=arr_pH,
        p_L=arr_pL,
        r_H=arr_rH,
        r_L=arr_rL,
        D_H=arr_DH,
        D_L=arr_DL,
        eta=np.zeros(n),
    )
