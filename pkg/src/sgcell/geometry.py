"""Poisson point process sampling and spatial distributions of cellular layouts.

All intensities are per square metre and all distances in metres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special, stats

from .errors import DomainError, ValidationError
from .numerics import integrate_semi_infinite, QuadratureSpec

__all__ = [
    "NetworkConfig",
    "Tier",
    "TierSet",
    "AnnularRegion",
    "VORONOI_SHAPE",
    "default_outer_radius",
    "sample_ppp",
    "nearest_distance_pdf",
    "nearest_distance_cdf",
    "sample_nearest_distance",
    "joint_nearest_nth_pdf",
    "sample_ordered_distances",
    "voronoi_area_pdf",
    "cell_load_pmf",
    "channel_access_probability",
    "tier_association_probability",
    "tier_service_distance_pdf",
    "sample_tier_service_distance",
]

# shape constant of the gamma fit to planar Poisson-Voronoi cell areas
VORONOI_SHAPE = 3.575


@dataclass(frozen=True)
class NetworkConfig:
    """Single-tier downlink parameters.

    ``exclusion_radius`` is the serving distance r0 when an analysis
    conditions on it; it may be left at 0 for distance-averaged scenarios.
    """

    lambda_bs: float
    power: float = 1.0
    eta: float = 4.0
    noise: float = 0.0
    exclusion_radius: float = 0.0

    def __post_init__(self):
        if not self.eta > 2:
            raise DomainError(f"path-loss exponent must exceed 2, got {self.eta}")
        if not self.lambda_bs > 0:
            raise ValidationError("lambda_bs must be positive")
        if not self.power > 0:
            raise ValidationError("power must be positive")
        if self.noise < 0 or self.exclusion_radius < 0:
            raise ValidationError("noise and exclusion_radius must be nonnegative")

    @property
    def delta(self) -> float:
        return 2.0 / self.eta

    def with_(self, **kw) -> "NetworkConfig":
        d = dict(lambda_bs=self.lambda_bs, power=self.power, eta=self.eta,
                 noise=self.noise, exclusion_radius=self.exclusion_radius)
        d.update(kw)
        return NetworkConfig(**d)


@dataclass(frozen=True)
class Tier:
    lambda_bs: float
    power: float
    bias: float = 1.0
    eta: float = 4.0

    def __post_init__(self):
        if not (self.lambda_bs > 0 and self.power > 0):
            raise ValidationError("tier intensity and power must be positive")
        if self.bias < 0:
            raise ValidationError("tier bias must be nonnegative")
        if not self.eta > 2:
            raise DomainError("tier path-loss exponent must exceed 2")


class TierSet:
    """Ordered collection of tiers; accepts ``Tier`` objects or 4-tuples."""

    def __init__(self, tiers: Sequence):
        items = [t if isinstance(t, Tier) else Tier(*t) for t in tiers]
        if not items:
            raise DomainError("a tier set needs at least one tier")
        self.tiers = tuple(items)

    def __len__(self):
        return len(self.tiers)

    def __getitem__(self, k) -> Tier:
        return self.tiers[k]

    def __iter__(self):
        return iter(self.tiers)

    def __repr__(self):
        return f"TierSet({list(self.tiers)!r})"

    @property
    def common_eta4(self) -> bool:
        return all(t.eta == 4.0 for t in self.tiers)

    def require_eta4(self):
        if not self.common_eta4:
            raise DomainError("closed form requires eta = 4 for every tier")

    def _index(self, k: int) -> int:
        if not 0 <= k < len(self.tiers):
            raise DomainError(f"tier index {k} out of range")
        return k


@dataclass(frozen=True)
class AnnularRegion:
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not (0 <= self.inner_radius < self.outer_radius < math.inf):
            raise ValidationError("need 0 <= inner < outer < inf")

    @property
    def area(self) -> float:
        return math.pi * (self.outer_radius ** 2 - self.inner_radius ** 2)


def default_outer_radius(lambda_bs: float, r0: float = 0.0) -> float:
    return max(30.0 / math.sqrt(math.pi * lambda_bs), 20.0 * r0)


def sample_ppp(intensity: float, region: AnnularRegion, rng: np.random.Generator) -> np.ndarray:
    """Points of a homogeneous PPP on the annulus as an ``(n, 2)`` array."""
    if intensity < 0:
        raise ValidationError("intensity must be nonnegative")
    n = rng.poisson(intensity * region.area) if intensity > 0 else 0
    if n == 0:
        return np.empty((0, 2))
    a2, b2 = region.inner_radius ** 2, region.outer_radius ** 2
    r = np.sqrt(a2 + rng.random(n) * (b2 - a2))
    th = rng.random(n) * (2 * math.pi)
    return np.column_stack((r * np.cos(th), r * np.sin(th)))


def nearest_distance_pdf(lam: float, r):
    r = np.asarray(r, dtype=float)
    out = np.where(r >= 0, 2 * math.pi * lam * r * np.exp(-math.pi * lam * r * r), 0.0)
    return out if out.ndim else float(out)


def nearest_distance_cdf(lam: float, r):
    r = np.maximum(np.asarray(r, dtype=float), 0.0)
    out = -np.expm1(-math.pi * lam * r * r)
    return out if out.ndim else float(out)


def sample_nearest_distance(lam: float, rng: np.random.Generator, size=None):
    """Inverse-CDF draw ``sqrt(-ln u / (pi lam))``."""
    u = 1.0 - rng.random(size)  # (0, 1]
    return np.sqrt(-np.log(u) / (math.pi * lam))


def joint_nearest_nth_pdf(lam: float, n: int, x: float, y: float) -> float:
    """Joint density of the nearest distance ``x`` and the n-th next distance ``y``.

    Points are indexed from 0, so ``n = 1`` pairs the nearest with the second
    nearest point.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if x < 0 or x > y:
        raise DomainError("joint density needs 0 <= x <= y")
    pl = math.pi * lam
    logv = ((n + 1) * math.log(pl) + math.log(4.0) - special.gammaln(n)
            - pl * y * y)
    if x == 0 or (y == x and n > 1):
        return 0.0
    return float(x * y * (y * y - x * x) ** (n - 1) * math.exp(logv))


def sample_ordered_distances(lam: float, n: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Ascending distances to the ``n`` nearest PPP points.

    ``pi lam r_k^2`` is the (k+1)-th arrival of a unit-rate Poisson process.
    With ``size`` the result has shape ``(size, n)``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    shape = (n,) if size is None else (int(size), n)
    e = rng.standard_exponential(shape)
    return np.sqrt(np.cumsum(e, axis=-1) / (math.pi * lam))


def voronoi_area_pdf(lam: float, v):
    """Gamma approximation of the typical Poisson-Voronoi cell area density."""
    c = VORONOI_SHAPE
    return stats.gamma.pdf(v, c, scale=1.0 / (c * lam))


def _load_dist(lambda_bs, lambda_ue):
    if not (lambda_bs > 0 and lambda_ue >= 0):
        raise ValidationError("intensities must be positive")
    c = VORONOI_SHAPE
    return stats.nbinom(c, lambda_bs * c / (lambda_bs * c + lambda_ue))


def cell_load_pmf(lambda_bs: float, lambda_ue: float, n) -> float:
    """Probability that a typical cell holds ``n`` users.

    The gamma cell-area model mixed with Poisson users gives a negative
    binomial law with shape ``c`` and success probability
    ``lambda_bs c / (lambda_bs c + lambda_ue)``.
    """
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError("load must be nonnegative")
    out = _load_dist(lambda_bs, lambda_ue).pmf(n)
    return out if np.ndim(out) else float(out)


def channel_access_probability(lambda_bs: float, lambda_ue: float, num_channels: int) -> float:
    """Probability that a given channel of a BS is in use.

    Loads ``k <= N`` occupy the channel with probability ``k/N``; larger loads
    always occupy it.  The sum is finite: ``sum_{k<N} P(k) k/N + P(U >= N)``.
    """
    N = int(num_channels)
    if N < 1:
        raise DomainError("need at least one channel")
    d = _load_dist(lambda_bs, lambda_ue)
    k = np.arange(N)
    pk = d.pmf(k)
    return float(np.sum(pk * k) / N + d.sf(N - 1))


def _assoc_exponent(tiers: TierSet, k: int):
    tk = tiers[k]
    terms = []
    for t in tiers:
        coef = t.lambda_bs * (t.bias * t.power / (tk.bias * tk.power)) ** (2.0 / t.eta)
        terms.append((coef, 2.0 * tk.eta / t.eta))
    return terms


def tier_association_probability(tiers: TierSet, k: int, *, force_integral: bool = False) -> float:
    """Probability that a typical user associates with tier ``k``.

    When every tier has eta = 4 the closed form
    ``lambda_k sqrt(B_k P_k) / sum_i lambda_i sqrt(B_i P_i)`` is returned;
    otherwise the radial integral is evaluated numerically.
    """
    if not isinstance(tiers, TierSet):
        tiers = TierSet(tiers)
    k = tiers._index(k)
    if tiers.common_eta4 and not force_integral:
        w = [t.lambda_bs * math.sqrt(t.bias * t.power) for t in tiers]
        return w[k] / sum(w)
    terms = _assoc_exponent(tiers, k)
    lam_k = tiers[k].lambda_bs
    # with s = pi r^2 the integrand becomes lam_k exp(-pi sum c_i (s/pi)^(p_i/2)) ds
    def f(s):
        return lam_k * math.exp(-math.pi * sum(c * (s / math.pi) ** (p / 2.0) for c, p in terms))
    scale = 1.0 / sum(t.lambda_bs for t in tiers)
    return integrate_semi_infinite(f, 0.0, QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10), scale=scale)


def tier_service_distance_pdf(tiers: TierSet, k: int, x):
    """Density of the serving distance for users attached to tier ``k``."""
    if not isinstance(tiers, TierSet):
        tiers = TierSet(tiers)
    k = tiers._index(k)
    x = np.asarray(x, dtype=float)
    A = tier_association_probability(tiers, k)
    expo = np.zeros_like(x)
    xx = np.maximum(x, 0.0)
    for c, p in _assoc_exponent(tiers, k):
        expo = expo + c * xx ** p
    out = np.where(x >= 0, 2 * math.pi * tiers[k].lambda_bs * xx / A * np.exp(-math.pi * expo), 0.0)
    return out if out.ndim else float(out)


def sample_tier_service_distance(tiers: TierSet, k: int, rng: np.random.Generator, size=None):
    """Inverse-CDF sampler of the tier-k serving distance (eta = 4 only)."""
    if not isinstance(tiers, TierSet):
        tiers = TierSet(tiers)
    tiers.require_eta4()
    k = tiers._index(k)
    lam_eff = sum(c for c, _ in _assoc_exponent(tiers, k))
    return sample_nearest_distance(lam_eff, rng, size)
