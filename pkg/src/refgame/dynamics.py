"""Repeated-game engine: projected ascent steps and trajectory simulation.

Each period every firm nudges its price along its own log-revenue
derivative and projects back onto the price box, after which the market
smooths the reference prices toward the posted prices:

    p_i <- Proj[p_lo, p_hi](p_i + eta_t * D_i(p, r))
    r_i <- alpha * r_i + (1 - alpha) * p_i        (old p, old r)

Both updates read the pre-step state. Simulations are strictly
sequential and bit-deterministic: identical inputs produce identical
trajectories. Trajectories are immutable once built and safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .model import (
    MarketParams,
    MarketState,
    PricePair,
    _consts,
    _demands_fast,
)

__all__ = [
    "RETENTION_LIMIT",
    "StepSchedule",
    "TrajectoryRecord",
    "Trajectory",
    "project",
    "reference_update",
    "ascent_step",
    "simulate",
]

# Records held in memory per simulation; longer runs must stream to a sink.
RETENTION_LIMIT = 10_000_000


class StepSchedule:
    """Step-size rule producing eta_t > 0 for t = 0, 1, 2, ...

    Four kinds:

    * ``constant(eta)``        -- eta_t = eta
    * ``inverse_sqrt(c)``      -- eta_t = c / sqrt(t + 1)
    * ``inverse_t(d)``         -- eta_t = d / (t + 1)
    * ``explicit(values)``     -- a caller-supplied sequence, validated
      positive and non-increasing

    The two diminishing kinds are non-increasing, vanish, and have a
    divergent sum by construction, which is the regime in which the
    learning dynamics provably stabilize. A constant schedule is legal
    but carries no such guarantee.
    """

    __slots__ = ("kind", "coef", "values")

    def __init__(self, kind: str, coef: float | None = None, values=None):
        if kind not in ("constant", "inverse_sqrt", "inverse_t", "explicit"):
            raise ValueError(f"unknown schedule kind {kind!r}")
        self.kind = kind
        self.coef = coef
        self.values = values
        if kind == "explicit":
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError("explicit schedule needs a non-empty 1-d sequence")
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
                raise ValueError("explicit schedule values must be finite and > 0")
            if np.any(np.diff(arr) > 0.0):
                raise ValueError("explicit schedule must be non-increasing")
            self.values = arr
        else:
            if coef is None or not (math.isfinite(coef) and coef > 0.0):
                raise ValueError(f"schedule coefficient must be finite and > 0, got {coef!r}")

    @classmethod
    def constant(cls, eta: float) -> "StepSchedule":
        return cls("constant", eta)

    @classmethod
    def inverse_sqrt(cls, c: float = 1.0) -> "StepSchedule":
        return cls("inverse_sqrt", c)

    @classmethod
    def inverse_t(cls, d: float) -> "StepSchedule":
        return cls("inverse_t", d)

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "StepSchedule":
        return cls("explicit", values=values)

    def __call__(self, t: int) -> float:
        if t < 0:
            raise ValueError("period index must be >= 0")
        if self.kind == "constant":
            return self.coef
        if self.kind == "inverse_sqrt":
            return self.coef / math.sqrt(t + 1.0)
        if self.kind == "inverse_t":
            return self.coef / (t + 1.0)
        # explicit: clamp reads past the end to the final value so the
        # informational eta of a trajectory's last record stays defined
        return float(self.values[min(t, self.values.size - 1)])

    def sequence(self, n: int) -> np.ndarray:
        """First n step sizes eta_0 .. eta_{n-1} as a float array."""
        if n < 0:
            raise ValueError("n must be >= 0")
        t = np.arange(n, dtype=float)
        if self.kind == "constant":
            return np.full(n, float(self.coef))
        if self.kind == "inverse_sqrt":
            return self.coef / np.sqrt(t + 1.0)
        if self.kind == "inverse_t":
            return self.coef / (t + 1.0)
        if n > self.values.size:
            raise ValueError(
                f"explicit schedule has {self.values.size} values, {n} requested"
            )
        return self.values[:n].copy()

    def describe(self) -> str:
        if self.kind == "explicit":
            return f"explicit(n={self.values.size})"
        return f"{self.kind}({self.coef:g})"

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"StepSchedule.{self.describe()}"

    @classmethod
    def from_dict(cls, spec: dict) -> "StepSchedule":
        """Build from a JSON-style descriptor, e.g. {"kind": "inverse_sqrt", "c": 1.0}."""
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ValueError("schedule descriptor must be a mapping with a 'kind' key")
        kind = spec["kind"]
        if kind == "constant":
            return cls.constant(spec.get("eta"))
        if kind == "inverse_sqrt":
            return cls.inverse_sqrt(spec.get("c", 1.0))
        if kind == "inverse_t":
            return cls.inverse_t(spec.get("d"))
        if kind == "explicit":
            return cls.explicit(spec.get("values"))
        raise ValueError(f"unknown schedule kind {kind!r}")


class TrajectoryRecord(NamedTuple):
    """One period of a simulated path.

    ``derivatives`` holds (D_H, D_L) evaluated at this period's state;
    ``eta`` is the schedule value at ``t`` (the step consumed when
    advancing to ``t + 1``; informational on the final record).
    """

    t: int
    prices: PricePair
    references: PricePair
    derivatives: tuple[float, float]
    eta: float


@dataclass
class Trajectory:
    """A finished simulation: per-period state stored as parallel arrays.

    Records are indexed contiguously from ``t0`` (0 for an ordinary
    run); arrays are read-only after construction.
    """

    params: MarketParams
    schedule: str
    p_H: np.ndarray
    p_L: np.ndarray
    r_H: np.ndarray
    r_L: np.ndarray
    D_H: np.ndarray
    D_L: np.ndarray
    eta: np.ndarray
    t0: int = 0

    def __post_init__(self) -> None:
        n = self.p_H.size
        for name in ("p_L", "r_H", "r_L", "D_H", "D_L", "eta"):
            if getattr(self, name).size != n:
                raise ValueError("trajectory arrays must share one length")
        for name in ("p_H", "p_L", "r_H", "r_L", "D_H", "D_L", "eta"):
            getattr(self, name).flags.writeable = False

    def __len__(self) -> int:
        return self.p_H.size

    @property
    def periods(self) -> np.ndarray:
        return self.t0 + np.arange(len(self))

    @property
    def prices(self) -> np.ndarray:
        """Array of shape (n, 2) with columns (p_H, p_L)."""
        return np.column_stack([self.p_H, self.p_L])

    @property
    def references(self) -> np.ndarray:
        return np.column_stack([self.r_H, self.r_L])

    def record(self, i: int) -> TrajectoryRecord:
        if not -len(self) <= i < len(self):
            raise IndexError(f"record index {i} out of range for length {len(self)}")
        if i < 0:
            i += len(self)
        return TrajectoryRecord(
            t=self.t0 + i,
            prices=PricePair(float(self.p_H[i]), float(self.p_L[i])),
            references=PricePair(float(self.r_H[i]), float(self.r_L[i])),
            derivatives=(float(self.D_H[i]), float(self.D_L[i])),
            eta=float(self.eta[i]),
        )

    def __iter__(self):
        return (self.record(i) for i in range(len(self)))

    def final_state(self) -> MarketState:
        rec = self.record(len(self) - 1)
        return MarketState(prices=rec.prices, references=rec.references)


def project(x: float, p_lo: float, p_hi: float) -> float:
    """Clamp x onto the interval [p_lo, p_hi]."""
    if not p_lo < p_hi:
        raise ValueError(f"empty interval [{p_lo}, {p_hi}]")
    return min(max(x, p_lo), p_hi)


def reference_update(alpha: float, r: PricePair, p: PricePair) -> PricePair:
    """Smooth references toward prices: alpha * r + (1 - alpha) * p.

    A convex combination cannot leave the interval spanned by its two
    endpoints mathematically, but a final rounding can exceed it by one
    ulp; the result is clamped componentwise onto [min(r,p), max(r,p)]
    to keep downstream feasibility checks exact.
    """
    if not (isinstance(alpha, (int, float)) and 0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    out = []
    for r_i, p_i in zip(r, p):
        v = alpha * r_i + (1.0 - alpha) * p_i
        lo, hi = (r_i, p_i) if r_i <= p_i else (p_i, r_i)
        out.append(min(max(v, lo), hi))
    return PricePair(*out)


def _state_floats(params: MarketParams, state: MarketState):
    p_H, p_L = float(state.prices[0]), float(state.prices[1])
    r_H, r_L = float(state.references[0]), float(state.references[1])
    if not params.in_box(p_H, p_L, r_H, r_L):
        raise ValueError(
            f"state {state!r} outside the price box [{params.p_lo}, {params.p_hi}]"
        )
    return p_H, p_L, r_H, r_L


def ascent_step(params: MarketParams, state: MarketState, eta: float) -> MarketState:
    """One period of the projected log-revenue ascent.

    Prices move by eta times the derivative evaluated at the *old*
    state and are projected onto the box; references are smoothed from
    the *old* (r, p) pair, with a defensive box projection against the
    one-ulp rounding a convex combination can incur. Requires eta > 0
    and a feasible state. Bit-identical to one period of
    :func:`simulate`.
    """
    if not (isinstance(eta, (int, float)) and math.isfinite(eta) and eta > 0.0):
        raise ValueError(f"step size must be finite and > 0, got {eta!r}")
    p_H, p_L, r_H, r_L = _state_floats(params, state)
    consts = _consts(params)
    lo, hi, alpha = params.p_lo, params.p_hi, params.alpha
    omega = 1.0 - alpha

    d_H, d_L = _demands_fast(consts, p_H, p_L, r_H, r_L)
    D_H = 1.0 / p_H + consts[1] * (d_H - 1.0)
    D_L = 1.0 / p_L + consts[4] * (d_L - 1.0)

    new_prices = PricePair(
        min(max(p_H + eta * D_H, lo), hi),
        min(max(p_L + eta * D_L, lo), hi),
    )
    new_refs = PricePair(
        min(max(alpha * r_H + omega * p_H, lo), hi),
        min(max(alpha * r_L + omega * p_L, lo), hi),
    )
    return MarketState(prices=new_prices, references=new_refs)


def simulate(
    params: MarketParams,
    init: MarketState,
    schedule: StepSchedule,
    horizon: int,
    sink: Callable[[TrajectoryRecord], None] | None = None,
) -> Trajectory:
    """Run the market for ``horizon`` periods from ``init``.

    Returns a trajectory of exactly ``horizon + 1`` records, record 0
    being the initial state. ``sink``, when given, is invoked once per
    record in period order as each record is finalized, which lets a
    caller stream output without buffering. Runs longer than
    ``RETENTION_LIMIT`` records refuse to buffer in memory and require
    a sink; they return a single-record trajectory holding the final
    state (``t0 = horizon``).
    """
    if not isinstance(horizon, int) or horizon < 1:
        raise ValueError(f"horizon must be an integer >= 1, got {horizon!r}")
    p_H, p_L, r_H, r_L = _state_floats(params, init)

    n = horizon + 1
    retain = n <= RETENTION_LIMIT
    if not retain and sink is None:
        raise ValueError(
            f"horizon {horizon} exceeds the in-memory retention limit "
            f"({RETENTION_LIMIT} records); pass a streaming sink"
        )

    # eta_0 .. eta_horizon; the final entry is informational only. An
    # explicit schedule may be exactly `horizon` long, in which case the
    # final record reuses its last value. Streaming runs evaluate the
    # schedule per step rather than materializing it.
    if retain:
        try:
            etas = schedule.sequence(n).tolist()
        except ValueError:
            etas = schedule.sequence(horizon).tolist()
            etas.append(etas[-1])
        eta_at = etas.__getitem__
    else:
        eta_at = schedule

    a_H, s_H, c_H, a_L, s_L, c_L = _consts(params)
    lo, hi = params.p_lo, params.p_hi
    alpha = params.alpha
    omega = 1.0 - alpha
    exp = math.exp
    has_sink = sink is not None

    if retain:
        arr_pH = np.empty(n)
        arr_pL = np.empty(n)
        arr_rH = np.empty(n)
        arr_rL = np.empty(n)
        arr_DH = np.empty(n)
        arr_DL = np.empty(n)

    for t in range(horizon):
        u_H = a_H - s_H * p_H + c_H * r_H
        u_L = a_L - s_L * p_L + c_L * r_L
        m = u_H if u_H > u_L else u_L
        if m < 0.0:
            m = 0.0
        e_H = exp(u_H - m)
        e_L = exp(u_L - m)
        e_0 = exp(-m)
        inv = 1.0 / (e_0 + e_H + e_L)
        D_H = 1.0 / p_H + s_H * (e_H * inv - 1.0)
        D_L = 1.0 / p_L + s_L * (e_L * inv - 1.0)
        eta = eta_at(t)

        if retain:
            arr_pH[t] = p_H
            arr_pL[t] = p_L
            arr_rH[t] = r_H
            arr_rL[t] = r_L
            arr_DH[t] = D_H
            arr_DL[t] = D_L
        if has_sink:
            sink(
                TrajectoryRecord(
                    t=t,
                    prices=PricePair(p_H, p_L),
                    references=PricePair(r_H, r_L),
                    derivatives=(D_H, D_L),
                    eta=eta,
                )
            )

        x = p_H + eta * D_H
        new_pH = lo if x < lo else hi if x > hi else x
        x = p_L + eta * D_L
        new_pL = lo if x < lo else hi if x > hi else x
        x = alpha * r_H + omega * p_H
        new_rH = lo if x < lo else hi if x > hi else x
        x = alpha * r_L + omega * p_L
        new_rL = lo if x < lo else hi if x > hi else x
        p_H, p_L, r_H, r_L = new_pH, new_pL, new_rH, new_rL

    # final record: state at t = horizon with its diagnostic derivative
    d_H, d_L = _demands_fast((a_H, s_H, c_H, a_L, s_L, c_L), p_H, p_L, r_H, r_L)
    D_H = 1.0 / p_H + s_H * (d_H - 1.0)
    D_L = 1.0 / p_L + s_L * (d_L - 1.0)
    eta_final = eta_at(horizon)
    if retain:
        arr_pH[horizon] = p_H
        arr_pL[horizon] = p_L
        arr_rH[horizon] = r_H
        arr_rL[horizon] = r_L
        arr_DH[horizon] = D_H
        arr_DL[horizon] = D_L
    if has_sink:
        sink(
            TrajectoryRecord(
                t=horizon,
                prices=PricePair(p_H, p_L),
                references=PricePair(r_H, r_L),
                derivatives=(D_H, D_L),
                eta=eta_final,
            )
        )

    if retain:
        return Trajectory(
            params=params,
            schedule=schedule.describe(),
            p_H=arr_pH,
            p_L=arr_pL,
            r_H=arr_rH,
            r_L=arr_rL,
            D_H=arr_DH,
            D_L=arr_DL,
            eta=np.asarray(etas),
        )
    return Trajectory(
        params=params,
        schedule=schedule.describe(),
        p_H=np.array([p_H]),
        p_L=np.array([p_L]),
        r_H=np.array([r_H]),
        r_L=np.array([r_L]),
        D_H=np.array([D_H]),
        D_L=np.array([D_L]),
        eta=np.array([eta_final]),
        t0=horizon,
    )
