"""Monte Carlo engine: power tables, null calibration, parallel replication.

Determinism contract: every replicate owns a counter-derived seed obtained
by hashing (master_seed, family, theta, n, replicate_index) with a
splitmix64 chain, and draws from its own Philox stream.  Results therefore
do not depend on chunking, scheduling, or the number of workers; table
cells are aggregated from integer rejection counts.
"""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .lifedist import Exponential, Gamma, LifeDistribution, LinearFailureRate, Weibull
from .ustat import SIGMA0_NORMAL

__all__ = [
    "CalibrationEntry",
    "CalibrationTable",
    "FAMILIES",
    "PowerConfig",
    "PowerRow",
    "PowerTable",
    "calibrate_null",
    "default_workers",
    "estimate_power",
    "make_distribution",
    "replicate_seed",
    "replicate_seeds",
]

WORKERS_ENV_VAR = "DMNLIFE_WORKERS"

FAMILIES = ("weibull", "lfr", "gamma", "exponential")

CHUNK = 2048  # replicates per kernel batch; fixed so chunking never varies

DEFAULT_LEVELS = (
    0.001, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.10,
    0.25, 0.50, 0.75, 0.90, 0.95, 0.99, 0.999,
)


def make_distribution(family: str, theta: float) -> LifeDistribution:
    family = family.lower()
    if family == "weibull":
        return Weibull(theta)
    if family == "lfr":
        return LinearFailureRate(theta)
    if family == "gamma":
        return Gamma(theta)
    if family == "exponential":
        return Exponential(theta if theta > 0 else 1.0)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _MASK
    return z ^ (z >> np.uint64(31))


def _fold_token(h: np.ndarray, token: np.uint64) -> np.ndarray:
    return _splitmix64(h ^ token)


def replicate_seeds(
    master_seed: int, family: str, theta: float, n: int, indices: np.ndarray
) -> np.ndarray:
    """Vectorized counter-based seed derivation; order-independent."""
    with np.errstate(over="ignore"):
        h = _splitmix64(np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF))
        for b in family.lower().encode("utf-8"):
            h = _fold_token(h, np.uint64(b))
        h = _fold_token(h, np.float64(theta).view(np.uint64))
        h = _fold_token(h, np.uint64(n))
        idx = np.asarray(indices, dtype=np.uint64)
        return _fold_token(np.broadcast_to(h, idx.shape).copy(), idx)


def replicate_seed(
    master_seed: int, family: str, theta: float, n: int, replicate_index: int
) -> int:
    """Seed for one replicate; same inputs always give the same value."""
    return int(replicate_seeds(master_seed, family, theta, n, np.array([replicate_index]))[0])


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _draw_chunk(dist: LifeDistribution, seeds: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((seeds.size, n))
    for i, s in enumerate(seeds):
        rng = np.random.Generator(np.random.Philox(key=int(s)))
        out[i] = dist.sample(rng, n)
    return out


def _delta_cap_replicates(
    family: str, theta: float, n: int, replicates: int, master_seed: int
) -> np.ndarray:
    dist = make_distribution(family, theta)
    out = np.empty(replicates)
    for start in range(0, replicates, CHUNK):
        idx = np.arange(start, min(start + CHUNK, replicates))
        seeds = replicate_seeds(master_seed, family, theta, n, idx)
        x = _draw_chunk(dist, seeds, n)
        out[idx] = _kernels.delta_hat_rows(x) / x.mean(axis=1) ** 3
    return out


@dataclass(frozen=True)
class PowerConfig:
    family: str
    theta_list: tuple[float, ...]
    n_list: tuple[int, ...]
    alpha: float = 0.05
    replicates: int = 10000
    master_seed: int = 0
    mode: str = "normal_approx"

    def __post_init__(self) -> None:
        if self.family.lower() not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError("alpha must be in (0, 0.5]")
        if self.replicates < 1000:
            raise ValueError("reported tables need at least 1000 replicates")
        if self.mode not in ("normal_approx", "calibrated"):
            raise ValueError("mode must be normal_approx or calibrated")
        object.__setattr__(self, "theta_list", tuple(float(t) for t in self.theta_list))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))


@dataclass(frozen=True)
class PowerRow:
    family: str
    theta: float
    n: int
    rejection_rate: float
    se: float
    replicates: int
    mode: str
    seed: int


@dataclass(frozen=True)
class PowerTable:
    rows: tuple[PowerRow, ...]

    def cell(self, theta: float, n: int) -> PowerRow:
        for row in self.rows:
            if row.theta == theta and row.n == n:
                return row
        raise KeyError((theta, n))

    def to_tsv(self) -> str:
        buf = io.StringIO()
        buf.write("family\ttheta\tn\trejection_rate\tse\treplicates\tmode\tseed\n")
        for r in self.rows:
            buf.write(
                f"{r.family}\t{r.theta:g}\t{r.n}\t{r.rejection_rate!r}\t"
                f"{r.se!r}\t{r.replicates}\t{r.mode}\t{r.seed}\n"
            )
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([r.__dict__ for r in self.rows])

    def to_text(self) -> str:
        """Aligned layout: one row per (family, theta), one column per n."""
        ns = sorted({r.n for r in self.rows})
        keys = []
        for r in self.rows:
            k = (r.family, r.theta)
            if k not in keys:
                keys.append(k)
        head = f"{'family':<12}{'theta':>6}" + "".join(f"{'n=' + str(n):>10}" for n in ns)
        lines = [head, "-" * len(head)]
        for family, theta in keys:
            cells = ""
            for n in ns:
                try:
                    cells += f"{self.cell(theta, n).rejection_rate:>10.4f}"
                except KeyError:
                    cells += f"{'-':>10}"
            lines.append(f"{family:<12}{theta:>6g}{cells}")
        return "\n".join(lines)


def _normal_threshold(alpha: float, n: int) -> float:
    return -float(stats.norm.ppf(1.0 - alpha)) * SIGMA0_NORMAL / math.sqrt(n)


def _power_cell(args) -> PowerRow:
    family, theta, n, alpha, replicates, master_seed, mode, quantile = args
    dcap = _delta_cap_replicates(family, theta, n, replicates, master_seed)
    threshold = _normal_threshold(alpha, n) if mode == "normal_approx" else quantile
    count = int(np.sum(dcap <= threshold))
    rate = count / replicates
    return PowerRow(
        family=family,
        theta=theta,
        n=n,
        rejection_rate=rate,
        se=math.sqrt(rate * (1.0 - rate) / replicates),
        replicates=replicates,
        mode=mode,
        seed=master_seed,
    )


def estimate_power(
    cfg: PowerConfig,
    calibration: "CalibrationTable | None" = None,
    workers: int | None = None,
) -> PowerTable:
    """Rejection rate per (theta, n) cell; bit-identical for any worker count."""
    if cfg.mode == "calibrated":
        if calibration is None:
            raise ValueError("calibrated mode requires a calibration table")
        for n in cfg.n_list:
            calibration.quantile(n, cfg.alpha)  # raises if not covered

    tasks = []
    for theta in cfg.theta_list:
        for n in cfg.n_list:
            q = (
                calibration.quantile(n, cfg.alpha)
                if cfg.mode == "calibrated"
                else None
            )
            tasks.append(
                (cfg.family, theta, n, cfg.alpha, cfg.replicates, cfg.master_seed,
                 cfg.mode, q)
            )

    workers = workers if workers is not None else default_workers()
    if workers <= 1 or len(tasks) == 1:
        rows = [_power_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            rows = list(pool.map(_power_cell, tasks))
    return PowerTable(rows=tuple(rows))


@dataclass(frozen=True)
class CalibrationEntry:
    n: int
    levels: tuple[float, ...]
    quantiles: tuple[float, ...]
    replicates: int
    seed: int
    null_mean: float
    null_sd: float

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if any(b < a for a, b in zip(self.quantiles, self.quantiles[1:])):
            raise ValueError("quantiles must be non-decreasing in level")


@dataclass
class CalibrationTable:
    """Null quantiles of the statistic per sample size.

    Lookup interpolates linearly in n between bracketing entries; levels
    outside the stored ladder raise.
    """

    entries: dict[int, CalibrationEntry] = field(default_factory=dict)

    def add(self, entry: CalibrationEntry) -> None:
        self.entries[entry.n] = entry

    def covered(self, n: int) -> bool:
        if n in self.entries:
            return True
        ns = sorted(self.entries)
        return bool(ns) and ns[0] <= n <= ns[-1]

    def _bracket(self, n: int) -> tuple[CalibrationEntry, CalibrationEntry, float]:
        if n in self.entries:
            e = self.entries[n]
            return e, e, 0.0
        ns = sorted(self.entries)
        if not self.covered(n):
            raise KeyError(f"no calibration entry covering n={n}")
        hi_idx = next(i for i, v in enumerate(ns) if v > n)
        lo, hi = self.entries[ns[hi_idx - 1]], self.entries[ns[hi_idx]]
        w = (n - lo.n) / (hi.n - lo.n)
        return lo, hi, w

    def quantile(self, n: int, level: float) -> float:
        lo, hi, w = self._bracket(n)
        if not (lo.levels == hi.levels):
            raise ValueError("bracketing entries carry different level ladders")
        if level < lo.levels[0] or level > lo.levels[-1]:
            raise KeyError(f"level {level} outside calibrated ladder")
        qlo = np.interp(level, lo.levels, lo.quantiles)
        qhi = np.interp(level, hi.levels, hi.quantiles)
        return float((1.0 - w) * qlo + w * qhi)

    def p_value(self, n: int, value: float) -> float:
        """Empirical lower-tail probability, resolved within the stored
        ladder (values beyond it saturate at the outermost levels)."""
        lo, hi, w = self._bracket(n)
        plo = np.interp(value, lo.quantiles, lo.levels)
        phi = np.interp(value, hi.quantiles, hi.levels)
        return float(np.clip((1.0 - w) * plo + w * phi, lo.levels[0], lo.levels[-1]))

    def to_tsv(self) -> str:
        buf = io.StringIO()
        buf.write("n\treplicates\tseed\tnull_mean\tnull_sd\tlevel\tquantile\n")
        for n in sorted(self.entries):
            e = self.entries[n]
            for lv, q in zip(e.levels, e.quantiles):
                buf.write(
                    f"{e.n}\t{e.replicates}\t{e.seed}\t{e.null_mean!r}\t"
                    f"{e.null_sd!r}\t{lv!r}\t{q!r}\n"
                )
        return buf.getvalue()

    @classmethod
    def from_tsv(cls, text: str) -> "CalibrationTable":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        header = lines[0].split("\t")
        expected = ["n", "replicates", "seed", "null_mean", "null_sd", "level", "quantile"]
        if header != expected:
            raise ValueError(f"unexpected calibration header: {header}")
        grouped: dict[int, dict] = {}
        for ln in lines[1:]:
            n_s, reps, seed, mean, sd, lv, q = ln.split("\t")
            g = grouped.setdefault(
                int(n_s),
                {
                    "replicates": int(reps),
                    "seed": int(seed),
                    "null_mean": float(mean),
                    "null_sd": float(sd),
                    "levels": [],
                    "quantiles": [],
                },
            )
            g["levels"].append(float(lv))
            g["quantiles"].append(float(q))
        table = cls()
        for n, g in grouped.items():
            table.add(
                CalibrationEntry(
                    n=n,
                    levels=tuple(g["levels"]),
                    quantiles=tuple(g["quantiles"]),
                    replicates=g["replicates"],
                    seed=g["seed"],
                    null_mean=g["null_mean"],
                    null_sd=g["null_sd"],
                )
            )
        return table

    def to_json(self) -> str:
        return json.dumps(
            {
                str(n): {
                    "levels": list(e.levels),
                    "quantiles": list(e.quantiles),
                    "replicates": e.replicates,
                    "seed": e.seed,
                    "null_mean": e.null_mean,
                    "null_sd": e.null_sd,
                }
                for n, e in sorted(self.entries.items())
            }
        )


def _calibrate_one(args) -> CalibrationEntry:
    n, replicates, master_seed, levels = args
    dcap = _delta_cap_replicates("exponential", 1.0, n, replicates, master_seed)
    qs = np.quantile(dcap, levels)
    return CalibrationEntry(
        n=n,
        levels=tuple(levels),
        quantiles=tuple(float(q) for q in qs),
        replicates=replicates,
        seed=master_seed,
        null_mean=float(dcap.mean()),
        null_sd=float(dcap.std(ddof=1)),
    )


def calibrate_null(
    n_list,
    replicates: int = 10000,
    master_seed: int = 0,
    levels: tuple[float, ...] = DEFAULT_LEVELS,
    workers: int | None = None,
) -> CalibrationTable:
    """Simulate the unit-exponential null at each n and store quantiles."""
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    n_list = [int(n)] if np.isscalar(n_list) else [int(n) for n in n_list]
    tasks = [(n, replicates, master_seed, tuple(levels)) for n in n_list]
    workers = workers if workers is not None else default_workers()
    if workers <= 1 or len(tasks) == 1:
        entries = [_calibrate_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            entries = list(pool.map(_calibrate_one, tasks))
    table = CalibrationTable()
    for e in entries:
        table.add(e)
    return table
