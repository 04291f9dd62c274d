"""The pairwise U-statistic test of exponentiality against ODL aging.

The degree-2 kernel is evaluated exactly as printed in its source; the
estimator sums the symmetrized kernel over unordered pairs, which equals
the ordered-pair mean over i != j.  Production evaluation uses a sorted
prefix-sum reduction (the cross terms cancel over ordered pairs), leaving
the naive double loop available to tests as an independent oracle.

Two decision modes are exposed.  `normal_approx` reproduces the reference
rule verbatim: standardize by sqrt(n)/1.173 with no centering and reject
in the lower tail.  That rule is not size-alpha - the kernel mean under
the exponential null is -1/4, not 0 - so `calibrated` mode instead rejects
below an empirical null quantile of the statistic simulated at the same n.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy import stats

from . import _kernels
from .lifedist import LifeDistribution, _quad

__all__ = [
    "AsymptoticVariance",
    "SIGMA0_NORMAL",
    "Sample",
    "TestResult",
    "asymptotic_variance",
    "delta_cap",
    "delta_hat",
    "kernel_phi",
    "kernel_phi_sym",
    "printed_variance_functional",
    "run_test",
]

# Null standard deviation used by the normal-approximation rule, kept as the
# reference constant even though asymptotic_variance() computes a different
# value (the recomputed figure is reported alongside, never substituted).
SIGMA0_NORMAL = 1.173

MODES = ("normal_approx", "calibrated")


def kernel_phi(x, y):
    """Degree-3 pair kernel as printed; not symmetric in its arguments."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.minimum(x, y)
    out = (
        0.5 * x * y * y
        - 0.5 * x * x * y
        + x * x * x / 6.0
        - x * x * m
        + 0.5 * x * m * m
    )
    return float(out) if out.ndim == 0 else out


def kernel_phi_sym(x, y):
    """Symmetrized kernel: average of both argument orders."""
    return 0.5 * (kernel_phi(x, y) + kernel_phi(y, x))


@dataclass(frozen=True)
class Sample:
    """Observed positive lifetimes, input order preserved."""

    values: np.ndarray

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if arr.size < 2:
            raise ValueError("a sample needs at least 2 values")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample values must be finite")
        if np.any(arr <= 0):
            raise ValueError("sample values must be positive")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def scaled(self, c: float) -> "Sample":
        return Sample(self.values * c)


def delta_hat(sample: Sample) -> float:
    """Mean of the symmetrized kernel over unordered pairs (no diagonal)."""
    return float(_kernels.delta_hat_rows(sample.values[None, :])[0])


def delta_cap(sample: Sample) -> float:
    """Scale-invariant statistic: delta_hat over the cubed sample mean."""
    return delta_hat(sample) / sample.mean**3


class Calibration(Protocol):
    """Null-quantile lookup used by the calibrated decision mode."""

    def quantile(self, n: int, level: float) -> float: ...

    def p_value(self, n: int, value: float) -> float: ...


@dataclass(frozen=True)
class TestResult:
    n: int
    delta_hat: float
    delta_cap: float
    z: float | None
    p_value: float
    alpha: float
    mode: str
    sigma0_used: float | None
    reject: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "delta_hat": self.delta_hat,
                "delta_cap": self.delta_cap,
                "z": self.z,
                "p_value": self.p_value,
                "alpha": self.alpha,
                "mode": self.mode,
                "sigma0_used": self.sigma0_used,
                "reject": self.reject,
            }
        )

    def to_text(self) -> str:
        rows = [
            ("n", str(self.n)),
            ("delta_hat", f"{self.delta_hat:.6f}"),
            ("delta_cap", f"{self.delta_cap:.6f}"),
            ("z", "-" if self.z is None else f"{self.z:.6f}"),
            ("p_value", f"{self.p_value:.6g}"),
            ("alpha", f"{self.alpha:g}"),
            ("mode", self.mode),
            ("sigma0", "-" if self.sigma0_used is None else f"{self.sigma0_used:g}"),
            ("decision", "reject H0" if self.reject else "fail to reject H0"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)

    def to_tsv(self) -> str:
        pairs = [
            ("n", str(self.n)),
            ("delta_hat", repr(self.delta_hat)),
            ("delta_cap", repr(self.delta_cap)),
            ("z", "NA" if self.z is None else repr(self.z)),
            ("p_value", repr(self.p_value)),
            ("alpha", repr(self.alpha)),
            ("mode", self.mode),
            ("sigma0_used", "NA" if self.sigma0_used is None else repr(self.sigma0_used)),
            ("reject", "true" if self.reject else "false"),
        ]
        buf = io.StringIO()
        buf.write("field\tvalue\n")
        for k, v in pairs:
            buf.write(f"{k}\t{v}\n")
        return buf.getvalue()


def run_test(
    sample: Sample,
    alpha: float = 0.05,
    mode: str = "normal_approx",
    calibration: Calibration | None = None,
) -> TestResult:
    """Run the exponentiality test on a sample.

    normal_approx: z = sqrt(n) * delta_cap / 1.173, reject when z falls at
    or below the lower-tail normal quantile; one-sided p from the normal
    CDF.  calibrated: reject when delta_cap falls at or below the empirical
    null alpha-quantile for this n, with p interpolated from the stored
    quantile ladder.
    """
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must be in (0, 0.5]")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")

    dh = delta_hat(sample)
    dc = dh / sample.mean**3
    n = sample.n

    if mode == "normal_approx":
        z = math.sqrt(n) * dc / SIGMA0_NORMAL
        z_crit = stats.norm.ppf(1.0 - alpha)
        return TestResult(
            n=n,
            delta_hat=dh,
            delta_cap=dc,
            z=z,
            p_value=float(stats.norm.cdf(z)),
            alpha=alpha,
            mode=mode,
            sigma0_used=SIGMA0_NORMAL,
            reject=bool(z <= -z_crit),
        )

    if calibration is None:
        raise ValueError("calibrated mode requires a calibration table")
    q = calibration.quantile(n, alpha)
    return TestResult(
        n=n,
        delta_hat=dh,
        delta_cap=dc,
        z=None,
        p_value=calibration.p_value(n, dc),
        alpha=alpha,
        mode=mode,
        sigma0_used=None,
        reject=bool(dc <= q),
    )


@dataclass(frozen=True)
class AsymptoticVariance:
    """Variance of sqrt(n) times the statistic, with a quadrature error bound."""

    sigma2: float
    error_estimate: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def _partials(dist: LifeDistribution, x: float, hi: float) -> tuple[float, ...]:
    # Partial moments entering the conditional kernel means.
    k1, _ = _quad(dist.survival, 0.0, min(x, hi))
    k2, _ = _quad(lambda u: u * dist.survival(u), 0.0, min(x, hi))
    j1, _ = _quad(lambda u: u * dist.density(u), 0.0, min(x, hi))
    j2, _ = _quad(lambda u: u * u * dist.density(u), 0.0, min(x, hi))
    j3, _ = _quad(lambda u: u**3 * dist.density(u), 0.0, min(x, hi))
    return k1, k2, j1, j2, j3


def _conditional_kernel_sum(
    dist: LifeDistribution, x: float, m1: float, m2: float, m3: float, hi: float
) -> float:
    # E[Phi(x, Y)] + E[Phi(Y, x)] for Y drawn from dist.
    k1, k2, j1, j2, j3 = _partials(dist, x, hi)
    e_min = k1                 # E[min(x, Y)]
    e_min2 = 2.0 * k2          # E[min(x, Y)^2]
    a = (
        0.5 * x * m2
        - 0.5 * x * x * m1
        + x**3 / 6.0
        - x * x * e_min
        + 0.5 * x * e_min2
    )
    e_y2min = j3 + x * (m2 - j2)      # E[Y^2 min(Y, x)]
    e_ymin2 = j3 + x * x * (m1 - j1)  # E[Y min(Y, x)^2]
    b = 0.5 * m1 * x * x - 0.5 * m2 * x + m3 / 6.0 - e_y2min + 0.5 * e_ymin2
    return a + b


def asymptotic_variance(dist: LifeDistribution) -> AsymptoticVariance:
    """Asymptotic variance of sqrt(n) * delta_cap under sampling from dist.

    Uses the joint projection of the pair statistic and the cubed sample
    mean: with g(x) the summed conditional kernel means and d the kernel
    mean, the influence function is (g(x) - 2d)/mean^3 - 3 d (x - mean) /
    mean^4, and the variance is its second moment under dist.

    Note: the reference constant 1.173 comes from a different functional
    (see printed_variance_functional); under the exponential null this
    routine yields sigma ~= 1.6008, which matching Monte Carlo confirms.
    """
    m1 = dist.mean
    m2 = dist.moment(2)
    m3 = dist.moment(3)
    # sixth-moment integrands: push the truncation well past the sf=1e-12 point
    hi = dist.truncation_point(floor=1e-20)

    def g(x: float) -> float:
        return _conditional_kernel_sum(dist, x, m1, m2, m3, hi)

    d_half, err_d = _quad(lambda x: g(x) * float(dist.density(x)), 0.0, hi)
    d = d_half / 2.0  # kernel mean: E[g]/2

    mu3 = m1**3
    mu4 = m1**4

    def influence(x: float) -> float:
        return (g(x) - 2.0 * d) / mu3 - 3.0 * d * (x - m1) / mu4

    sigma2, err_v = _quad(
        lambda x: influence(x) ** 2 * float(dist.density(x)), 0.0, hi
    )
    return AsymptoticVariance(sigma2=sigma2, error_estimate=err_v + err_d)


def printed_variance_functional(dist: LifeDistribution) -> AsymptoticVariance:
    """The variance functional as printed in the reference derivation.

    Differs from asymptotic_variance: it omits the sample-mean correction
    and its conditional-expectation identities do not match the kernel.
    Under the exponential null it evaluates to sigma ~= 1.1732, which is
    where the stored constant 1.173 comes from.
    """
    m1 = dist.mean
    m3 = dist.moment(3)
    hi = dist.truncation_point(floor=1e-20)

    def g_printed(x: float) -> float:
        k1, k2, j1, j2, j3 = _partials(dist, x, hi)
        return (
            x**3 / 6.0
            + m3 / 6.0
            - 0.5 * x**3 * float(dist.survival(x))
            + 1.5 * (x * j2 + j3 - x * x * j1)
        )

    e_g, err1 = _quad(lambda x: g_printed(x) * float(dist.density(x)), 0.0, hi)
    e_g2, err2 = _quad(
        lambda x: g_printed(x) ** 2 * float(dist.density(x)), 0.0, hi
    )
    sigma2 = (e_g2 - e_g**2) / m1**6
    return AsymptoticVariance(sigma2=sigma2, error_estimate=err1 + err2)
