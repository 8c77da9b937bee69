"""Laplace transforms of the aggregate interference power for each scenario.

Two argument conventions appear:

* ``z`` (units 1/W) for transforms conditioned on a serving distance, as in
  :func:`lt_baseline`; and
* ``a`` (dimensionless) for transforms of the interference normalised by the
  intended received power ``P0 r0^-eta``.  With Rayleigh intended fading the
  outage at threshold ``T`` is ``1 - L(T)`` in this convention.

:class:`LaplaceTransform` wraps either kind with a scenario tag and a
parameter snapshot so the metrics can consume any of them uniformly.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, DomainError, UnsupportedConfigurationError, ValidationError
from .geometry import TierSet, sample_ordered_distances, tier_association_probability
from .interference import Constellation
from .numerics import kummer_deficit, lt_derivative

__all__ = [
    "LaplaceTransform",
    "lt_none",
    "lt_baseline",
    "lt_generalized",
    "lt_random_distance",
    "lt_load_aware",
    "lt_multitier",
    "lt_frequency_reuse",
    "lt_uplink",
    "lt_uplink_conditional",
    "expected_sqrt_uplink_power",
    "lt_nakagami",
    "lt_nakagami_random_distance",
    "lt_zeta",
    "lt_network_mimo",
    "effective_intensity_shadowing",
    "lognormal_fractional_moment",
]


class LaplaceTransform:
    """An evaluable ``z -> E exp(-z X)`` with scenario metadata.

    ``domain`` is ``"z"`` for transforms in 1/W conditioned on a serving
    distance and ``"a"`` for transforms normalised by the intended power.
    """

    def __init__(self, fn: Callable, scenario: str, params: dict | None = None,
                 domain: str = "a"):
        if domain not in ("a", "z"):
            raise ValidationError("domain must be 'a' or 'z'")
        self._fn = fn
        self.scenario = scenario
        self.params = dict(params or {})
        self.domain = domain

    def __call__(self, z):
        if np.ndim(z):
            return np.array([self._fn(float(v)) for v in np.ravel(z)]).reshape(np.shape(z))
        return float(self._fn(float(z)))

    def derivative(self, order: int, z: float) -> float:
        return lt_derivative(self, order, z)

    def __repr__(self):
        ps = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"LaplaceTransform({self.scenario}; {ps})"

    # constructors --------------------------------------------------------

    @classmethod
    def none(cls):
        return cls(lambda z: 1.0, "none", {}, "a")

    @classmethod
    def baseline(cls, lam, power, eta, r0):
        return cls(lambda z: lt_baseline(z, lam, power, eta, r0), "baseline",
                   dict(lam=lam, power=power, eta=eta, r0=r0), "z")

    @classmethod
    def generalized(cls, lam, r0, r_excl, p0=1.0, p_int=1.0):
        return cls(lambda a: lt_generalized(a, lam, r0, r_excl, p0, p_int), "generalized",
                   dict(lam=lam, r0=r0, r_excl=r_excl, p0=p0, p_int=p_int))

    @classmethod
    def random_distance(cls):
        return cls(lt_random_distance, "random_distance")

    @classmethod
    def load_aware(cls, p):
        return cls(lambda a: lt_load_aware(a, p), "load_aware", dict(p=p))

    @classmethod
    def multitier(cls, tiers, serving_tier=None):
        tiers = tiers if isinstance(tiers, TierSet) else TierSet(tiers)
        if not tiers.common_eta4:
            _mixed_eta(tiers)
        return cls(lambda a: lt_multitier(a, tiers, serving_tier), "multitier",
                   dict(tiers=tiers, serving_tier=serving_tier))

    @classmethod
    def frequency_reuse(cls, delta, lam=1.0):
        return cls(lambda a: lt_frequency_reuse(a, lam, delta), "reuse", dict(delta=delta))

    @classmethod
    def uplink(cls):
        return cls(lt_uplink, "uplink")

    @classmethod
    def nakagami(cls, lam, r0, r_excl, m, eta=4.0, power_ratio=1.0):
        return cls(lambda a: lt_nakagami(a, lam, r0, r_excl, m, eta, power_ratio), "nakagami",
                   dict(lam=lam, r0=r0, r_excl=r_excl, m=m, eta=eta, power_ratio=power_ratio))

    @classmethod
    def nakagami_random_distance(cls, m, eta=4.0):
        return cls(lambda a: lt_nakagami_random_distance(a, m, eta), "nakagami_random_distance",
                   dict(m=m, eta=eta))

    @classmethod
    def zeta(cls, lam, r0, eta, constellation):
        return cls(lambda z: lt_zeta(z, lam, r0, eta, constellation), "zeta",
                   dict(lam=lam, r0=r0, eta=eta, constellation=constellation))


def _mixed_eta(tiers):
    raise UnsupportedConfigurationError("multi-tier transform needs eta = 4 in every tier")


def _nonneg(a, name="argument"):
    if np.any(np.asarray(a) < 0):
        raise DomainError(f"{name} must be nonnegative")


def lt_none(a):
    """Transform of zero interference."""
    return np.ones_like(np.asarray(a, dtype=float)) if np.ndim(a) else 1.0


def lt_baseline(z, lam: float, power: float, eta: float, r0: float, *, force_general: bool = False):
    """Rayleigh-faded single-tier interference power beyond ``r0``.

    ``exp(-2 pi lam z P r0^(2-eta) / (eta-2) 2F1(1, 1-d; 2-d; -z P / r0^eta))``
    with ``d = 2/eta``; for ``eta = 4`` the arctangent form is used.
    """
    if not eta > 2:
        raise DomainError("interference power is infinite for eta <= 2")
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    _nonneg(z, "z")
    z = np.asarray(z, dtype=float)
    if eta == 4.0 and not force_general:
        s = np.sqrt(z * power)
        out = np.exp(-math.pi * lam * s * np.arctan(s / r0 ** 2))
    else:
        d = 2.0 / eta
        out = np.exp(-2 * math.pi * lam * z * power * r0 ** (2 - eta) / (eta - 2)
                     * special.hyp2f1(1.0, 1 - d, 2 - d, -z * power / r0 ** eta))
    return out if out.ndim else float(out)


def lt_generalized(a, lam: float, r0: float, r_excl: float, p0: float = 1.0, p_int: float = 1.0):
    """eta = 4 transform with serving distance ``r0`` and interferer exclusion ``r_excl``."""
    if not (r0 > 0 and r_excl > 0):
        raise DomainError("r0 and r_excl must be positive")
    _nonneg(a, "a")
    s = np.sqrt(np.asarray(a, dtype=float) * p_int / p0)
    out = np.exp(-math.pi * lam * s * r0 ** 2 * np.arctan((r0 / r_excl) ** 2 * s))
    return out if out.ndim else float(out)


def lt_random_distance(a):
    """Distance-averaged eta = 4 transform ``1 / (1 + sqrt(a) atan(sqrt(a)))``."""
    _nonneg(a, "a")
    s = np.sqrt(np.asarray(a, dtype=float))
    out = 1.0 / (1.0 + s * np.arctan(s))
    return out if out.ndim else float(out)


def lt_load_aware(a, p: float):
    """Random-distance transform with interferers thinned to active fraction ``p``."""
    if not 0 <= p <= 1:
        raise DomainError("channel access probability must lie in [0, 1]")
    _nonneg(a, "a")
    s = np.sqrt(np.asarray(a, dtype=float))
    out = 1.0 / (p * s * np.arctan(s) + 1.0)
    return out if out.ndim else float(out)


def lt_multitier(a, tiers: TierSet, serving_tier: int | None = None):
    """Distance-averaged eta = 4 transform for biased multi-tier association.

    With ``serving_tier=None`` the per-tier transforms are mixed by the tier
    association probabilities.
    """
    if not isinstance(tiers, TierSet):
        tiers = TierSet(tiers)
    if not tiers.common_eta4:
        _mixed_eta(tiers)
    _nonneg(a, "a")
    a = np.asarray(a, dtype=float)

    def per_tier(k):
        Bk = tiers[k].bias
        num = sum(math.sqrt(t.bias * t.power) * t.lambda_bs for t in tiers)
        den = 0.0
        for t in tiers:
            s = np.sqrt(a * Bk / t.bias)
            den = den + math.sqrt(t.bias * t.power) * t.lambda_bs * (1.0 + s * np.arctan(s))
        return num / den

    if serving_tier is not None:
        out = per_tier(tiers._index(serving_tier))
    else:
        out = sum(tier_association_probability(tiers, k) * per_tier(k) for k in range(len(tiers)))
    return out if np.ndim(out) else float(out)


_REUSE_TOL = dict(epsabs=1e-13, epsrel=1e-11, limit=200)


def lt_frequency_reuse(a, lam: float, delta: int):
    """Distance-averaged eta = 4 transform under coordinated reuse factor ``delta``.

    Interferers form a PPP of intensity ``lam/delta`` outside the distance to
    the ``delta``-th nearest BS (index ``delta-1`` counting the server as 0).
    In ``u = pi lam r0^2`` and ``w = pi lam (r_I^2 - r0^2)`` the transform is

        ∫∫ e^-u w^(n-1) e^-w / Gamma(n) exp(-(u sqrt(a)/delta) atan(sqrt(a) u / (u + w))) dw du

    with ``n = delta - 1``; ``lam`` drops out and is accepted only for
    signature symmetry.
    """
    delta = int(delta)
    if delta < 1:
        raise DomainError("reuse factor must be >= 1")
    if np.ndim(a):
        return np.array([lt_frequency_reuse(float(v), lam, delta) for v in np.ravel(a)]).reshape(np.shape(a))
    a = float(a)
    _nonneg(a, "a")
    if delta == 1:
        return lt_random_distance(a)
    if a == 0.0:
        return 1.0
    n = delta - 1
    sa = math.sqrt(a)
    lg = math.lgamma(n)

    def inner(u):
        def g(w):
            if w == 0.0 and n > 1:
                return 0.0
            return math.exp((n - 1) * math.log(w) - w - lg
                            - (u * sa / delta) * math.atan(sa * u / (u + w)))
        if u == 0.0:
            return 1.0
        v, e = integrate.quad(g, 0.0, np.inf, **_REUSE_TOL)
        return v

    outer = lambda u: math.exp(-u) * inner(u)
    val, err = integrate.quad(outer, 0.0, np.inf, **_REUSE_TOL)
    if err > 1e-9:
        raise AccuracyError("reuse transform quadrature did not converge", val, err)
    return float(val)


def expected_sqrt_uplink_power(rho: float, lam: float) -> float:
    """E sqrt(P_I) = sqrt(rho) / (pi lam) for channel inversion with eta = 4."""
    return math.sqrt(rho) / (math.pi * lam)


def lt_uplink_conditional(a, lam: float, rho: float, e_sqrt_p: float | None = None):
    """Uplink transform before substituting E sqrt(P_I).

    Each interfering UE is kept outside ``(P_I/rho)^(1/4)`` of the test BS,
    giving ``exp(-pi lam E{sqrt P_I} sqrt(a/rho) atan(sqrt a))``.
    """
    _nonneg(a, "a")
    if e_sqrt_p is None:
        e_sqrt_p = expected_sqrt_uplink_power(rho, lam)
    s = np.sqrt(np.asarray(a, dtype=float))
    out = np.exp(-math.pi * lam * e_sqrt_p * s / math.sqrt(rho) * np.arctan(s))
    return out if out.ndim else float(out)


def lt_uplink(a):
    """Uplink transform with full channel inversion: ``exp(-sqrt(a) atan(sqrt(a)))``."""
    _nonneg(a, "a")
    s = np.sqrt(np.asarray(a, dtype=float))
    out = np.exp(-s * np.arctan(s))
    return out if out.ndim else float(out)


def _check_m(m):
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise UnsupportedConfigurationError("Nakagami shape must be an integer >= 1")
    return int(m)


def lt_nakagami(a, lam: float, r0: float, r_excl: float, m: int, eta: float = 4.0,
                power_ratio: float = 1.0):
    """Transform with unit-mean Nakagami-m (Gamma(m, 1/m)) interferer fading.

    ``exp(-pi lam r_I^2 [2F1(-d, m; 1-d; -(r0/r_I)^eta a P_I/(P0 m)) - 1])``;
    at ``m = 1, eta = 4`` this equals :func:`lt_generalized`.
    """
    m = _check_m(m)
    if not eta > 2:
        raise DomainError("eta must exceed 2")
    if not (r0 > 0 and r_excl > 0):
        raise DomainError("r0 and r_excl must be positive")
    _nonneg(a, "a")
    d = 2.0 / eta
    t = (r0 / r_excl) ** eta * np.asarray(a, dtype=float) * power_ratio / m
    out = np.exp(-math.pi * lam * r_excl ** 2 * (special.hyp2f1(-d, m, 1 - d, -t) - 1.0))
    return out if out.ndim else float(out)


def lt_nakagami_random_distance(a, m: int, eta: float = 4.0):
    """Nakagami-m transform averaged over the nearest-BS distance: ``1 / 2F1(-d, m; 1-d; -a/m)``."""
    m = _check_m(m)
    if not eta > 2:
        raise DomainError("eta must exceed 2")
    _nonneg(a, "a")
    d = 2.0 / eta
    out = 1.0 / special.hyp2f1(-d, m, 1 - d, -np.asarray(a, dtype=float) / m)
    return out if np.ndim(out) else float(out)


def lt_zeta(z, lam: float, r0: float, eta: float, constellation: Constellation):
    """Transform of the conditional interference variance with exact symbols.

    ``z`` is normalised by ``P r0^-eta``:
    ``exp(pi lam r0^2 (1 - mean_m 1F1(-d; 1-d; -z |s_m|^2)))``.
    """
    if not eta > 2:
        raise DomainError("eta must exceed 2")
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    _nonneg(z, "z")
    d = 2.0 / eta
    z = np.asarray(z, dtype=float)
    a2 = np.abs(constellation.symbols) ** 2
    acc = np.zeros_like(z)
    for e in a2:
        acc = acc + kummer_deficit(d, z * e)
    out = np.exp(math.pi * lam * r0 ** 2 * acc / a2.size)
    return out if out.ndim else float(out)


def lt_network_mimo(a: float, lam: float, n: int, mc_samples: int = 100_000,
                    rng: np.random.Generator | int | None = 0):
    """Monte-Carlo transform for non-coherent joint transmission by the ``n`` nearest BSs.

    Returns ``(estimate, standard_error)``.  Averages
    ``exp(-pi lam sqrt(a/S) atan(sqrt(a/S) / r_(n-1)^2))`` with
    ``S = sum_i r_i^-4`` over PPP order statistics.
    """
    n = int(n)
    if n < 1:
        raise DomainError("cooperation size must be >= 1")
    if int(mc_samples) < 1000:
        raise ValidationError("network MIMO transform needs at least 1000 samples")
    _nonneg(a, "a")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    r = sample_ordered_distances(lam, n, rng, size=int(mc_samples))
    S = np.sum(r ** -4.0, axis=1)
    s = np.sqrt(a / S)
    v = np.exp(-math.pi * lam * s * np.arctan(s / r[:, -1] ** 2))
    return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size))


def lognormal_fractional_moment(sigma_db: float, eta: float) -> float:
    """E{x^(2/eta)} for lognormal shadowing with dB spread ``sigma_db``."""
    sn = sigma_db * math.log(10.0) / 10.0
    return math.exp((2.0 / eta) ** 2 * sn * sn / 2.0)


def effective_intensity_shadowing(lam: float, eta: float, moment: float) -> float:
    """Intensity seen through shadowing: ``lam * E{x^(2/eta)}``."""
    if not moment > 0:
        raise DomainError("shadowing fractional moment must be positive")
    if not eta > 2:
        raise DomainError("eta must exceed 2")
    return lam * moment
