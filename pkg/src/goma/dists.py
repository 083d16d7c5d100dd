"""Value-of-information distributions.

Every distribution exposes the same small surface used by the rest of the
package: ``cdf``, ``quantile``, ``tail_expectation``, ``tx_prob``,
``transmits`` and ``sample``.  Thresholds live in quantile space: a node with
quantile threshold ``theta`` transmits iff its observed value ``v`` satisfies
``v > quantile(theta)``.

For continuous families ``tx_prob(theta) == 1 - theta`` and
``tail_expectation(theta) == E[V 1{V > Q(theta)}]``.  For discrete PMFs the
generalized inverse is taken on the real line, so ``theta = 0`` always means
"transmit every value" and ``theta = 1`` means "never transmit".
"""
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "DiscreteDist",
    "Uniform",
    "Exponential",
    "Gaussian",
    "Pareto",
    "chi_square_2_scaled",
    "binary",
    "parse_dist",
    "discretize",
]

_CDF_TOL = 1e-12


def _check_prob(p):
    if isinstance(p, float):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability outside [0, 1]: {p}")
        return np.float64(p)
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError(f"probability outside [0, 1]: {p}")
    return p


class ContinuousDist:
    """Base class for continuous VoI laws with closed-form quantities."""

    name = "continuous"

    def cdf(self, v):
        raise NotImplementedError

    def _ppf(self, p):
        raise NotImplementedError

    def quantile(self, p):
        """Generalized inverse ``Q(p) = inf{v : P(v) >= p}``."""
        p = _check_prob(p)
        return self._ppf(p)

    def tail_expectation(self, theta):
        raise NotImplementedError

    def tx_prob(self, theta):
        return 1.0 - _check_prob(theta)

    def value_threshold(self, theta):
        return self.quantile(theta)

    def transmits(self, values, theta):
        return np.asarray(values) > self.quantile(theta)

    def tail_above(self, v):
        """``E[V 1{V > v}]`` for value thresholds ``v`` (vectorized)."""
        return self.tail_expectation(self.cdf(v))

    def conditional_tail(self, v):
        """``E[V | V > v]``."""
        theta = self.cdf(v)
        return self.tail_expectation(theta) / (1.0 - theta)

    def sample(self, rng, size=None):
        raise NotImplementedError

    @property
    def mean(self):
        return float(self.tail_expectation(0.0))

    def scaled(self, c):
        """Law of ``c * V`` for ``c > 0``."""
        raise NotImplementedError

    def support_max(self, p=0.9999):
        return float(self.quantile(p))


@dataclass(frozen=True)
class Uniform(ContinuousDist):
    low: float = 0.0
    high: float = 1.0
    name = "uniform"

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError("uniform needs high > low")

    def cdf(self, v):
        return np.clip((np.asarray(v, dtype=float) - self.low) / (self.high - self.low), 0.0, 1.0)

    def _ppf(self, p):
        return self.low + p * (self.high - self.low)

    def tail_expectation(self, theta):
        theta = _check_prob(theta)
        q = self._ppf(theta)
        return (1.0 - theta) * (q + self.high) / 2.0

    def sample(self, rng, size=None):
        return rng.uniform(self.low, self.high, size)

    def scaled(self, c):
        return Uniform(self.low * c, self.high * c)


@dataclass(frozen=True)
class Exponential(ContinuousDist):
    """Exponential law with rate ``lam`` (mean ``1 / lam``)."""

    lam: float = 1.0
    name = "exp"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("exponential rate must be positive")

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        return np.where(v > 0, -np.expm1(-self.lam * np.maximum(v, 0.0)), 0.0)

    def _ppf(self, p):
        with np.errstate(divide="ignore"):
            return -np.log1p(-p) / self.lam

    def tail_expectation(self, theta):
        # E[V 1{V > q}] = (q + 1/lam) e^{-lam q} = (q + 1/lam) (1 - theta)
        s = 1.0 - _check_prob(theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = s * (1.0 - np.log(s)) / self.lam
        return np.where(s > 0, out, 0.0)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.lam, size)

    def scaled(self, c):
        return Exponential(self.lam / c)


@dataclass(frozen=True)
class Gaussian(ContinuousDist):
    """Untruncated normal law parameterized by mean and variance."""

    mu: float = 0.0
    var: float = 1.0
    name = "gauss"

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError("gaussian variance must be positive")

    @property
    def sigma(self):
        return float(np.sqrt(self.var))

    def cdf(self, v):
        return special.ndtr((np.asarray(v, dtype=float) - self.mu) / self.sigma)

    def _ppf(self, p):
        return self.mu + self.sigma * special.ndtri(p)

    def tail_expectation(self, theta):
        theta = _check_prob(theta)
        z = special.ndtri(theta)
        phi = np.where(np.isfinite(z), np.exp(-0.5 * np.where(np.isfinite(z), z, 0.0) ** 2), 0.0)
        return self.mu * (1.0 - theta) + self.sigma * phi / np.sqrt(2 * np.pi)

    def sample(self, rng, size=None):
        return rng.normal(self.mu, self.sigma, size)

    def scaled(self, c):
        return Gaussian(self.mu * c, self.var * c * c)


@dataclass(frozen=True)
class Pareto(ContinuousDist):
    """Pareto law with scale ``z`` and shape ``alpha > 1``."""

    z: float = 1.0
    alpha: float = 2.0
    name = "pareto"

    def __post_init__(self):
        if not (self.z > 0 and self.alpha > 1):
            raise ValueError("pareto needs z > 0 and alpha > 1 (finite mean)")

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        return np.where(v > self.z, 1.0 - (self.z / np.maximum(v, self.z)) ** self.alpha, 0.0)

    def _ppf(self, p):
        with np.errstate(divide="ignore"):
            return self.z * (1.0 - p) ** (-1.0 / self.alpha)

    def tail_expectation(self, theta):
        # E[V 1{V > q}] = alpha z^alpha q^{1-alpha} / (alpha - 1)
        theta = _check_prob(theta)
        s = 1.0 - theta
        return self.alpha * self.z * s ** (1.0 - 1.0 / self.alpha) / (self.alpha - 1.0)

    def sample(self, rng, size=None):
        return self.z * (1.0 + rng.pareto(self.alpha, size))

    def scaled(self, c):
        return Pareto(self.z * c, self.alpha)


def chi_square_2_scaled(mean):
    """Chi-square law with 2 degrees of freedom rescaled to ``mean``.

    A chi-square variable with 2 dof is exponential with mean 2, so the
    rescaled law is exactly ``Exponential(1 / mean)``.
    """
    if not mean > 0:
        raise ValueError("mean must be positive")
    return Exponential(1.0 / mean)


@dataclass(frozen=True)
class DiscreteDist:
    """Finite PMF over strictly increasing values (VoI is normally nonnegative)."""

    values: tuple
    probs: tuple
    _cum: np.ndarray = field(init=False, repr=False, compare=False)
    _cum_before: np.ndarray = field(init=False, repr=False, compare=False)
    name = "pmf"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise ValueError("values and probs must be matching non-empty 1-D sequences")
        if np.any(np.diff(v) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(p <= 0):
            raise ValueError("every probability must be positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "probs", tuple(p.tolist()))
        cum = np.cumsum(p)
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_cum_before", np.concatenate([[0.0], cum[:-1]]))

    @property
    def v(self):
        return np.asarray(self.values)

    @property
    def p(self):
        return np.asarray(self.probs)

    @property
    def mean(self):
        return float(self.v @ self.p)

    @property
    def cdf_levels(self):
        """CDF evaluated at each support point."""
        return self._cum.copy()

    def cdf(self, v):
        idx = np.searchsorted(self.v, np.asarray(v, dtype=float), side="right")
        return np.concatenate([[0.0], self._cum])[idx]

    def quantile(self, p):
        p = _check_prob(p)
        idx = np.searchsorted(self._cum, p - _CDF_TOL, side="left")
        return self.v[np.minimum(idx, self.v.size - 1)]

    def tx_mask(self, theta):
        """Per-value transmit indicator for quantile threshold ``theta``."""
        theta = float(_check_prob(theta))
        return self._cum_before >= theta - _CDF_TOL

    def tx_prob(self, theta):
        return float(self.p[self.tx_mask(theta)].sum())

    def tail_expectation(self, theta):
        mask = self.tx_mask(theta)
        return float(self.v[mask] @ self.p[mask])

    def value_threshold(self, theta):
        """Largest value kept silent; ``-inf`` when every value transmits."""
        mask = self.tx_mask(theta)
        silent = self.v[~mask]
        return float(silent[-1]) if silent.size else -np.inf

    def transmits(self, values, theta):
        return np.asarray(values) > self.value_threshold(theta)

    def tail_above(self, v):
        idx = np.searchsorted(self.v, np.asarray(v, dtype=float), side="right")
        rev = np.concatenate([np.cumsum((self.v * self.p)[::-1])[::-1], [0.0]])
        return rev[idx]

    def conditional_tail(self, v):
        mask = self.v > v
        if not mask.any():
            return np.nan
        return float(self.v[mask] @ self.p[mask] / self.p[mask].sum())

    def sample(self, rng, size=None):
        idx = np.searchsorted(self._cum, rng.random(size), side="right")
        return self.v[np.minimum(idx, self.v.size - 1)]

    def scaled(self, c):
        return DiscreteDist(tuple(self.v * c), self.probs)

    def support_max(self, p=0.9999):
        return float(self.v[-1])


def binary(p):
    """Anomaly model: value 1 with probability ``p``, else 0."""
    if not 0 < p <= 1:
        raise ValueError("binary needs 0 < p <= 1")
    if p == 1:
        return DiscreteDist((1.0,), (1.0,))
    return DiscreteDist((0.0, 1.0), (1.0 - p, p))


def discretize(d, step=1e-3, p_max=0.9999):
    """PMF on a ``step`` grid approximating a continuous law.

    Mass of each cell ``(v - step, v]`` goes to its right edge; the upper tail
    beyond ``Q(p_max)`` is lumped on the last point at its conditional mean.
    """
    lo = float(d.quantile(1e-12))
    hi = float(d.quantile(p_max))
    edges = np.arange(np.floor(lo / step) * step, hi + step, step)
    cdf = d.cdf(edges)
    probs = np.diff(cdf)
    vals = edges[1:]
    keep = probs > 0
    vals, probs = vals[keep], probs[keep]
    rest = 1.0 - probs.sum()
    if rest > 0:
        tail_v = d.tail_expectation(float(cdf[-1])) / rest
        if tail_v > vals[-1]:
            vals = np.append(vals, tail_v)
            probs = np.append(probs, rest)
        else:
            probs[-1] += rest
    probs = probs / probs.sum()
    return DiscreteDist(tuple(vals), tuple(probs))


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_dist(text):
    """Build a distribution from a config string such as ``exp(1)``.

    Recognized forms: ``exp(rate)``, ``gauss(mu,var)``, ``uniform(lo,hi)``,
    ``pareto(z,alpha)``, ``chi2m(mean)``, ``binary(p)``,
    ``pmf([v...],[p...])``.
    """
    s = text.strip().replace(" ", "")
    m = re.fullmatch(r"pmf\(\[([^\]]*)\],\[([^\]]*)\]\)", s)
    if m:
        vals = [float(x) for x in m.group(1).split(",") if x]
        probs = [float(x) for x in m.group(2).split(",") if x]
        return DiscreteDist(tuple(vals), tuple(probs))
    m = re.fullmatch(r"([a-z0-9]+)\(([^)]*)\)", s)
    if not m:
        raise ValueError(f"cannot parse distribution {text!r}")
    fam, args = m.group(1), m.group(2)
    nums = [float(x) for x in re.findall(_NUM, args)]
    builders = {
        "exp": (Exponential, 1),
        "gauss": (Gaussian, 2),
        "uniform": (Uniform, 2),
        "pareto": (Pareto, 2),
        "chi2m": (chi_square_2_scaled, 1),
        "binary": (binary, 1),
    }
    if fam not in builders:
        raise ValueError(f"unknown distribution family {fam!r}")
    fn, nargs = builders[fam]
    if len(nums) != nargs:
        raise ValueError(f"{fam} takes {nargs} argument(s), got {len(nums)}")
    return fn(*nums)


def format_dist(d):
    """Inverse of :func:`parse_dist` (used for table headers)."""
    if isinstance(d, Exponential):
        return f"exp({d.lam:g})"
    if isinstance(d, Gaussian):
        return f"gauss({d.mu:g},{d.var:g})"
    if isinstance(d, Uniform):
        return f"uniform({d.low:g},{d.high:g})"
    if isinstance(d, Pareto):
        return f"pareto({d.z:g},{d.alpha:g})"
    if isinstance(d, DiscreteDist):
        vals = ",".join(f"{x:g}" for x in d.values)
        probs = ",".join(f"{x:g}" for x in d.probs)
        return f"pmf([{vals}],[{probs}])"
    return repr(d)
