"""Two-state dichotomous Markov noise driving a unit's age.

The noise takes the value +v_plus (age grows) or -v_minus (age shrinks) and
switches out of the +/- state at rates lambda_plus / lambda_minus.  Closed
forms cover occupation probabilities, transition matrices, the long-run
drift, and the exponential steady state of the clamped age process; the
sample-path simulator realises the same dynamics with exact exponential
holding times and a sticky boundary at age zero.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "AgingClass",
    "DmnParams",
    "NoSteadyStateError",
    "OccupationProbs",
    "Trajectory",
    "classify",
    "drift",
    "empirical_occupancy",
    "occupation_probs",
    "simulate_trajectory",
    "steady_state_mean",
    "steady_state_pdf",
    "steady_state_zero_fraction",
    "trajectory_age_stats",
    "trajectory_to_tsv",
    "transition_matrix",
]

_DRIFT_TOL = 1e-12

STATE_PLUS = 1
STATE_MINUS = -1


class NoSteadyStateError(ValueError):
    """Raised when the drift regime admits no normalizable steady state."""


class AgingClass(enum.Enum):
    OIL = "OIL"
    ODL = "ODL"
    STEADY_EXPONENTIAL = "SteadyExponential"


@dataclass(frozen=True)
class DmnParams:
    """Rates of the dichotomous noise; speeds are stored as magnitudes."""

    v_plus: float
    v_minus: float
    lambda_plus: float
    lambda_minus: float

    def __post_init__(self) -> None:
        if not (self.v_plus > 0 and self.v_minus > 0):
            raise ValueError("speeds v_plus and v_minus must be positive")
        if self.lambda_plus < 0 or self.lambda_minus < 0:
            raise ValueError("switching rates must be non-negative")
        if self.lambda_plus + self.lambda_minus <= 0:
            raise ValueError("at least one switching rate must be positive")

    @property
    def rate_total(self) -> float:
        """Relaxation rate: inverse mean time between switches."""
        return self.lambda_plus + self.lambda_minus

    @property
    def stationary_plus(self) -> float:
        """Long-run probability of the + state."""
        return self.lambda_minus / self.rate_total

    @property
    def stationary_minus(self) -> float:
        return self.lambda_plus / self.rate_total


@dataclass(frozen=True)
class OccupationProbs:
    p_plus: float
    p_minus: float

    @classmethod
    def from_plus(cls, p_plus: float) -> "OccupationProbs":
        return cls(p_plus=p_plus, p_minus=1.0 - p_plus)


def occupation_probs(params: DmnParams, t: float) -> OccupationProbs:
    """State probabilities at time t for a unit starting in the + state.

    p_plus relaxes from 1 toward the stationary value at the total rate;
    p_minus is constructed as 1 - p_plus so the pair sums to 1 exactly.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    lam = params.rate_total
    p_plus = params.stationary_plus + (params.lambda_plus / lam) * math.exp(-lam * t)
    return OccupationProbs.from_plus(p_plus)


def transition_matrix(params: DmnParams, t: float) -> np.ndarray:
    """2x2 stochastic matrix P[to, from] with state order (-, +)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    lam = params.rate_total
    lp, lm = params.lambda_plus, params.lambda_minus
    e = math.exp(-lam * t)
    return np.array(
        [
            [(lp + lm * e) / lam, lp * (1.0 - e) / lam],
            [lm * (1.0 - e) / lam, (lm + lp * e) / lam],
        ]
    )


def drift(params: DmnParams) -> float:
    """Long-run mean velocity of the age process."""
    return (
        params.v_plus * params.lambda_minus - params.v_minus * params.lambda_plus
    ) / params.rate_total


def classify(params: DmnParams) -> AgingClass:
    """Aging class from the drift sign; zero detected scale-free at 1e-12."""
    num = params.v_plus * params.lambda_minus - params.v_minus * params.lambda_plus
    scale = (params.v_plus + params.v_minus) * params.rate_total
    r = num / scale
    if abs(r) <= _DRIFT_TOL:
        return AgingClass.STEADY_EXPONENTIAL
    return AgingClass.OIL if r > 0 else AgingClass.ODL


def steady_state_mean(params: DmnParams) -> float:
    """Mean age of the exponential steady state (requires negative drift)."""
    denom = params.v_minus * params.lambda_plus - params.v_plus * params.lambda_minus
    if denom <= 0:
        raise NoSteadyStateError("no steady state in this drift regime")
    return params.v_plus * params.v_minus / denom


def steady_state_pdf(params: DmnParams, x):
    """Steady-state age density (1/L) exp(-x/L); accepts scalar or array x."""
    mean = steady_state_mean(params)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("age must be non-negative")
    out = np.exp(-x / mean) / mean
    return float(out) if out.ndim == 0 else out


def steady_state_zero_fraction(params: DmnParams) -> float:
    """Stationary probability of sitting exactly at the age-0 boundary.

    The sticky clamp puts an atom at zero; balancing the boundary flux
    against the exponential bulk gives the atom mass in closed form.  The
    positive ages remain exponential with the steady-state mean.
    """
    mean = steady_state_mean(params)
    a_inv = (1.0 + params.v_plus / params.v_minus) * mean + (
        params.v_plus / params.lambda_minus
    )
    return (params.v_plus / params.lambda_minus) / a_inv


@dataclass(frozen=True)
class Trajectory:
    """Sample path: per-segment states and clamped ages at segment ends."""

    params: DmnParams
    start_age: float
    switch_times: np.ndarray = field(repr=False)  # segment end times, last = t_end
    states: np.ndarray = field(repr=False)        # +1 / -1 per segment
    ages: np.ndarray = field(repr=False)          # age at each segment end
    seed: int = 0

    @property
    def t_end(self) -> float:
        return float(self.switch_times[-1])

    def age_at(self, times) -> np.ndarray:
        """Ages at arbitrary times in [0, t_end] (clamped linear segments)."""
        times = np.asarray(times, dtype=np.float64)
        if np.any(times < 0) or np.any(times > self.t_end):
            raise ValueError("times must lie within [0, t_end]")
        seg = np.searchsorted(self.switch_times, times, side="left")
        seg = np.minimum(seg, len(self.states) - 1)
        t0 = np.where(seg == 0, 0.0, self.switch_times[np.maximum(seg - 1, 0)])
        a0 = np.where(seg == 0, self.start_age, self.ages[np.maximum(seg - 1, 0)])
        dt = times - t0
        v = np.where(
            self.states[seg] == STATE_PLUS, self.params.v_plus, -self.params.v_minus
        )
        return np.maximum(a0 + v * dt, 0.0)


def simulate_trajectory(
    params: DmnParams,
    x0: float,
    t_end: float,
    seed: int,
    start_state: int = STATE_PLUS,
) -> Trajectory:
    """Simulate the age path with exact exponential holding times.

    Holding time in state s is exponential with rate lambda_s (infinite when
    the rate is zero); the age moves at +v_plus or -v_minus and sticks at
    zero until the next upward segment.  Deterministic for a given seed.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if x0 < 0:
        raise ValueError("x0 must be non-negative")
    if start_state not in (STATE_PLUS, STATE_MINUS):
        raise ValueError("start_state must be +1 or -1")

    rng = np.random.default_rng(seed)
    scale_plus = 1.0 / params.lambda_plus if params.lambda_plus > 0 else np.inf
    scale_minus = 1.0 / params.lambda_minus if params.lambda_minus > 0 else np.inf

    mean_hold = min(scale_plus, scale_minus, t_end)
    block = max(int(t_end / mean_hold * 1.2) + 16, 64)
    block += block % 2  # even block size keeps state parity across blocks

    scales = np.empty(block)
    if start_state == STATE_PLUS:
        scales[0::2] = scale_plus
        scales[1::2] = scale_minus
    else:
        scales[0::2] = scale_minus
        scales[1::2] = scale_plus

    holds_list = []
    total = 0.0
    while total < t_end and math.isfinite(total):
        h = rng.standard_exponential(block) * scales
        holds_list.append(h)
        total += float(np.sum(h))

    holds = np.concatenate(holds_list)
    ends = np.cumsum(holds)
    n_seg = int(np.searchsorted(ends, t_end)) + 1
    holds = holds[:n_seg]
    ends = ends[:n_seg]
    ends[-1] = t_end

    states = np.empty(n_seg, dtype=np.int8)
    if start_state == STATE_PLUS:
        states[0::2] = STATE_PLUS
        states[1::2] = STATE_MINUS
    else:
        states[0::2] = STATE_MINUS
        states[1::2] = STATE_PLUS

    starts = np.concatenate(([0.0], ends[:-1]))
    durations = ends - starts
    increments = np.where(
        states == STATE_PLUS, params.v_plus * durations, -params.v_minus * durations
    )
    ages = _kernels.lindley_ages(increments, x0)
    return Trajectory(
        params=params,
        start_age=float(x0),
        switch_times=ends,
        states=states,
        ages=ages,
        seed=seed,
    )


def empirical_occupancy(traj: Trajectory) -> tuple[float, float]:
    """Time-weighted fractions spent in the (+, -) states; sums to 1."""
    starts = np.concatenate(([0.0], traj.switch_times[:-1]))
    durations = traj.switch_times - starts
    plus = float(np.sum(durations[traj.states == STATE_PLUS])) / traj.t_end
    return plus, 1.0 - plus


def trajectory_age_stats(traj: Trajectory) -> dict[str, float]:
    """Exact time averages over the path.

    Returns the time-average age, the fraction of time pinned at age zero,
    and the average age conditional on being strictly positive.  Per-segment
    integrals account for a downward segment hitting the boundary mid-way.
    """
    p = traj.params
    starts = np.concatenate(([0.0], traj.switch_times[:-1]))
    d = traj.switch_times - starts
    a0 = np.concatenate(([traj.start_age], traj.ages[:-1]))

    up = traj.states == STATE_PLUS
    area_up = a0 * d + 0.5 * p.v_plus * d * d
    hits = a0 < p.v_minus * d  # downward segment reaches zero
    tau = np.where(hits, a0 / p.v_minus, d)
    area_dn = a0 * tau - 0.5 * p.v_minus * tau * tau
    area = np.where(up, area_up, area_dn)
    zero_time = float(np.sum(np.where(~up & hits, d - tau, 0.0)))

    total_area = float(np.sum(area))
    t_end = traj.t_end
    zero_frac = zero_time / t_end
    mean_age = total_area / t_end
    pos_time = t_end - zero_time
    return {
        "time_average_age": mean_age,
        "zero_fraction": zero_frac,
        "positive_mean_age": total_area / pos_time if pos_time > 0 else 0.0,
    }


def trajectory_to_tsv(traj: Trajectory) -> str:
    """TSV with columns time/state/age; one row per segment end plus t=0."""
    buf = io.StringIO()
    buf.write("time\tstate\tage\n")
    first_state = "+" if traj.states[0] == STATE_PLUS else "-"
    buf.write(f"0.0\t{first_state}\t{traj.start_age!r}\n")
    for t, s, a in zip(traj.switch_times, traj.states, traj.ages):
        sym = "+" if s == STATE_PLUS else "-"
        buf.write(f"{float(t)!r}\t{sym}\t{float(a)!r}\n")
    return buf.getvalue()
