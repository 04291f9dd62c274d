"""Life-distribution families and numerical class checkers.

Provides the exponential, Weibull, linear-failure-rate and gamma families
used as test alternatives, the equilibrium (stationary renewal) survival
function, and checkers for the overall-decreasing-life integral criterion,
the hazard-rate criterion, and the pairwise moment inequality.

All integrals use adaptive quadrature truncated where the survival function
drops below 1e-12; the families here have light tails, so the discarded
mass is negligible at the tolerances used.
"""

from __future__ import annotations

import enum
import io
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "Exponential",
    "Gamma",
    "HazardReport",
    "LifeDistribution",
    "LinearFailureRate",
    "MomentInequalityResult",
    "OdlReport",
    "OdlVerdict",
    "QuadratureError",
    "Weibull",
    "default_odl_grid",
    "equilibrium_survival",
    "hazard_criterion",
    "hazard_rate",
    "moment_inequality_check",
    "odl_check",
]

_SURVIVAL_FLOOR = 1e-12
_QUAD_ABS_TOL = 1e-12
_QUAD_REL_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; carries the achieved error estimate."""


def _quad(fn, a: float, b: float) -> tuple[float, float]:
    if b <= a:
        return 0.0, 0.0
    val, err = integrate.quad(
        fn, a, b, epsabs=_QUAD_ABS_TOL, epsrel=_QUAD_REL_TOL, limit=400
    )
    if err > max(1e-9, 1e-6 * abs(val)):
        raise QuadratureError(
            f"integral on [{a:g}, {b:g}] reached error estimate {err:.3e}"
        )
    return val, err


class LifeDistribution(ABC):
    """Positive life distribution: survival, density, mean, sampling."""

    name: str = "life"
    theta: float = float("nan")

    @abstractmethod
    def survival(self, x: float) -> float:
        """P(X > x)."""

    @abstractmethod
    def density(self, x: float) -> float:
        """Probability density at x."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size=None):
        """Draw samples using the caller's RNG stream."""

    @property
    def mean(self) -> float:
        """E[X], by quadrature of the survival function unless overridden."""
        val, _ = _quad(self.survival, 0.0, self.truncation_point())
        return val

    def moment(self, k: int) -> float:
        """E[X^k] by quadrature against the density."""
        # deeper cutoff than the bare survival floor: the x^k weight revives
        # tail mass that sf=1e-12 truncation would drop
        hi = self.truncation_point(floor=_SURVIVAL_FLOOR * 1e-6)
        val, _ = _quad(lambda x: x**k * self.density(x), 0.0, hi)
        return val

    def truncation_point(self, floor: float = _SURVIVAL_FLOOR) -> float:
        """x with survival(x) below `floor`; used to truncate integrals."""
        return self.inverse_survival(floor)

    @abstractmethod
    def inverse_survival(self, q: float) -> float:
        """x such that survival(x) = q, for q in (0, 1)."""

    def label(self) -> str:
        return f"{self.name}(theta={self.theta:g})"


class Exponential(LifeDistribution):
    """Exponential life with the given mean; the null of the aging test."""

    name = "exponential"

    def __init__(self, mean: float = 1.0):
        if mean <= 0:
            raise ValueError("mean must be positive")
        self._mean = float(mean)
        self.theta = float(mean)
        self.is_ifr = True

    def survival(self, x):
        return np.exp(-np.asarray(x, dtype=float) / self._mean)

    def density(self, x):
        return np.exp(-np.asarray(x, dtype=float) / self._mean) / self._mean

    @property
    def mean(self):
        return self._mean

    def moment(self, k: int) -> float:
        return math.factorial(k) * self._mean**k

    def inverse_survival(self, q):
        return -self._mean * math.log(q)

    def sample(self, rng, size=None):
        return self._mean * rng.standard_exponential(size)

    def label(self):
        return f"exponential(mean={self._mean:g})"


class Weibull(LifeDistribution):
    """Survival exp(-x^theta); increasing failure rate when theta >= 1."""

    name = "weibull"

    def __init__(self, theta: float):
        if theta <= 0:
            raise ValueError("shape theta must be positive")
        self.theta = float(theta)
        self.is_ifr = theta >= 1.0

    def survival(self, x):
        return np.exp(-np.asarray(x, dtype=float) ** self.theta)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self.theta * x ** (self.theta - 1.0) * np.exp(-(x**self.theta))

    @property
    def mean(self):
        return special.gamma(1.0 + 1.0 / self.theta)

    def moment(self, k: int) -> float:
        return special.gamma(1.0 + k / self.theta)

    def inverse_survival(self, q):
        return (-math.log(q)) ** (1.0 / self.theta)

    def sample(self, rng, size=None):
        return rng.standard_exponential(size) ** (1.0 / self.theta)


class LinearFailureRate(LifeDistribution):
    """Survival exp(-x - theta/2 x^2); hazard 1 + theta*x."""

    name = "lfr"

    def __init__(self, theta: float):
        if theta < 0:
            raise ValueError("slope theta must be non-negative")
        self.theta = float(theta)
        self.is_ifr = True

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-x - 0.5 * self.theta * x * x)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return (1.0 + self.theta * x) * np.exp(-x - 0.5 * self.theta * x * x)

    @property
    def mean(self):
        if self.theta == 0:
            return 1.0
        # exp(1/(2 theta)) * sqrt(2 pi/theta) * normal_sf(1/sqrt(theta)),
        # written with erfcx for stability at small theta.
        return math.sqrt(math.pi / (2.0 * self.theta)) * special.erfcx(
            1.0 / math.sqrt(2.0 * self.theta)
        )

    def inverse_survival(self, q):
        level = -math.log(q)
        if self.theta == 0:
            return level
        return (math.sqrt(1.0 + 2.0 * self.theta * level) - 1.0) / self.theta

    def sample(self, rng, size=None):
        e = rng.standard_exponential(size)
        if self.theta == 0:
            return e
        return (np.sqrt(1.0 + 2.0 * self.theta * e) - 1.0) / self.theta


class Gamma(LifeDistribution):
    """Gamma life with shape theta and unit scale."""

    name = "gamma"

    def __init__(self, theta: float):
        if theta <= 0:
            raise ValueError("shape theta must be positive")
        self.theta = float(theta)
        self.is_ifr = theta >= 1.0

    def survival(self, x):
        return special.gammaincc(self.theta, np.asarray(x, dtype=float))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            logpdf = (
                (self.theta - 1.0) * np.log(x) - x - special.gammaln(self.theta)
            )
        return np.where(x > 0, np.exp(logpdf), 1.0 if self.theta == 1.0 else 0.0)

    @property
    def mean(self):
        return self.theta

    def moment(self, k: int) -> float:
        return special.poch(self.theta, k)

    def inverse_survival(self, q):
        return float(special.gammainccinv(self.theta, q))

    def sample(self, rng, size=None):
        return rng.standard_gamma(self.theta, size)


def equilibrium_survival(dist: LifeDistribution, x: float) -> float:
    """Stationary-renewal survival: mean-normalized integral of F-bar past x.

    Equals P(remaining life > x) for the equilibrium renewal age; 1 at x=0,
    non-increasing, and exp(-x/mean) exactly in the exponential case.
    """
    if x < 0:
        raise ValueError("age must be non-negative")
    hi = dist.truncation_point()
    if x >= hi:
        return 0.0
    val, _ = _quad(dist.survival, x, hi)
    return min(max(val / dist.mean, 0.0), 1.0)


class OdlVerdict(enum.Enum):
    ODL = "ODL"
    VIOLATED = "violated"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class OdlReport:
    """Grid evaluation of the overall-decreasing-life integral criterion."""

    grid: np.ndarray
    lhs: np.ndarray       # integral of the equilibrium survival past t
    rhs: np.ndarray       # mean times equilibrium survival at t
    verdict: OdlVerdict
    tol: float

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    def to_tsv(self) -> str:
        buf = io.StringIO()
        buf.write("t\tlhs\trhs\tmargin\n")
        for t, l, r in zip(self.grid, self.lhs, self.rhs):
            buf.write(
                f"{float(t)!r}\t{float(l)!r}\t{float(r)!r}\t{float(r - l)!r}\n"
            )
        return buf.getvalue()


def default_odl_grid(dist: LifeDistribution, points: int = 64) -> np.ndarray:
    """Log-spaced grid from 0.01 to 10 times the mean."""
    mean = dist.mean
    return np.geomspace(0.01 * mean, 10.0 * mean, points)


def odl_check(
    dist: LifeDistribution,
    grid: np.ndarray | None = None,
    tol: float = 1e-6,
) -> OdlReport:
    """Check the integral criterion: tail integral of the equilibrium
    survival must not exceed mean times the equilibrium survival, at every
    grid point.  Verdict is BOUNDARY when equality holds everywhere within
    tol (the exponential case), ODL when no violation exceeds tol, and
    VIOLATED otherwise.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if grid is None:
        grid = default_odl_grid(dist)
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")

    mean = dist.mean
    hi = dist.truncation_point()
    lhs = np.empty(grid.shape)
    rhs = np.empty(grid.shape)
    for i, t in enumerate(grid):
        # Fubini: integral_t^inf W(x) dx = (1/mean) integral_t^inf (u-t) Fbar(u) du
        tail, _ = _quad(lambda u: (u - t) * dist.survival(u), t, hi)
        lhs[i] = tail / mean
        w_tail, _ = _quad(dist.survival, t, hi)
        rhs[i] = w_tail  # mean * W(t) with W = w_tail / mean

    margin = rhs - lhs
    if np.all(np.abs(margin) <= tol):
        verdict = OdlVerdict.BOUNDARY
    elif np.all(margin >= -tol):
        verdict = OdlVerdict.ODL
    else:
        verdict = OdlVerdict.VIOLATED
    return OdlReport(grid=grid, lhs=lhs, rhs=rhs, verdict=verdict, tol=tol)


def hazard_rate(dist: LifeDistribution, x: float) -> float:
    """Instantaneous failure rate density/survival at x."""
    sf = float(dist.survival(x))
    if sf <= 0.0 or not math.isfinite(sf):
        raise ValueError(f"survival underflows at x={x:g}; hazard undefined")
    return float(dist.density(x)) / sf


@dataclass(frozen=True)
class HazardReport:
    """Pointwise comparison of the hazard rate against 1/mean.

    `below` marks grid points with hazard strictly under the threshold;
    `censored` marks points where the survival underflowed and the hazard
    could not be evaluated.
    """

    grid: np.ndarray
    hazard: np.ndarray
    threshold: float
    below: np.ndarray
    censored: np.ndarray

    @property
    def all_below(self) -> bool:
        return bool(np.all(self.below[~self.censored]))


def hazard_criterion(
    dist: LifeDistribution, grid: np.ndarray | None = None
) -> HazardReport:
    if grid is None:
        grid = default_odl_grid(dist)
    grid = np.asarray(grid, dtype=float)
    threshold = 1.0 / dist.mean
    hz = np.full(grid.shape, np.nan)
    censored = np.zeros(grid.shape, dtype=bool)
    for i, t in enumerate(grid):
        try:
            hz[i] = hazard_rate(dist, t)
        except ValueError:
            censored[i] = True
    below = hz < threshold
    return HazardReport(
        grid=grid, hazard=hz, threshold=threshold, below=below, censored=censored
    )


@dataclass(frozen=True)
class MomentInequalityResult:
    """Both printed expectation forms and the definitional integral forms.

    The Monte Carlo fields evaluate the pairwise expectation displays as
    printed (`rhs_paper` keeps the extra first-coordinate factor of the
    general-order display; `rhs_corollary` is the order-zero corollary
    variant without it).  The integral fields evaluate the inequality the
    expectations were derived from.  The forms disagree at the exponential
    boundary; all are reported, none silently corrected.
    """

    r: int
    lhs_paper: float
    lhs_paper_se: float
    rhs_paper: float
    rhs_paper_se: float
    rhs_corollary: float
    rhs_corollary_se: float
    lhs_integral: float
    lhs_integral_err: float
    rhs_integral: float
    rhs_integral_err: float


def moment_inequality_check(
    dist: LifeDistribution,
    r: int = 0,
    n_samples: int = 10**6,
    seed: int = 0,
) -> MomentInequalityResult:
    """Evaluate the moment inequality for order r both ways.

    Monte Carlo over iid pairs for the printed expectation forms, nested
    quadrature for the double-integral forms.  Standard errors accompany
    the Monte Carlo values, absolute error estimates the quadratures.
    """
    if r < 0:
        raise ValueError("order r must be a non-negative integer")
    rng = np.random.default_rng(seed)
    x1 = np.asarray(dist.sample(rng, n_samples), dtype=float)
    x2 = np.asarray(dist.sample(rng, n_samples), dtype=float)
    m = np.minimum(x1, x2)
    mean = dist.mean

    def mc(values: np.ndarray) -> tuple[float, float]:
        return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n_samples))

    lhs_vals = (
        x1 ** (r + 1) * x2**2 / (2.0 * (r + 1))
        - x1 ** (r + 2) * x2 / (r + 2)
        + x1 ** (r + 3) / (2.0 * (r + 3))
    )
    rhs_paper_vals = mean * (
        x1 * m ** (r + 1) / (r + 1) - x1 * m ** (r + 2) / (r + 2)
    )
    rhs_cor_vals = mean * (x1 * m ** (r + 1) / (r + 1) - m ** (r + 2) / (r + 2))

    lhs_paper, lhs_se = mc(lhs_vals)
    rhs_paper, rhs_paper_se = mc(rhs_paper_vals)
    rhs_cor, rhs_cor_se = mc(rhs_cor_vals)

    hi = dist.truncation_point()

    def lhs_inner(t: float) -> float:
        tail, _ = _quad(lambda u: (u - t) * dist.survival(u), t, hi)
        return t**r * float(dist.survival(t)) * tail / mean

    def rhs_inner(t: float) -> float:
        tail, _ = _quad(dist.survival, t, hi)
        return t**r * float(dist.survival(t)) * tail

    lhs_int, lhs_int_err = _quad(lhs_inner, 0.0, hi)
    rhs_int, rhs_int_err = _quad(rhs_inner, 0.0, hi)

    return MomentInequalityResult(
        r=r,
        lhs_paper=lhs_paper,
        lhs_paper_se=lhs_se,
        rhs_paper=rhs_paper,
        rhs_paper_se=rhs_paper_se,
        rhs_corollary=rhs_cor,
        rhs_corollary_se=rhs_cor_se,
        lhs_integral=lhs_int,
        lhs_integral_err=lhs_int_err,
        rhs_integral=rhs_int,
        rhs_integral_err=rhs_int_err,
    )
