"""Statistics of the complex baseband aggregate interference.

The field is the sum ``i = sum_k sqrt(P) r_k^(-eta/2) h_k s_k`` over the PPP of
interfering base stations outside the exclusion radius ``r0``, with Rayleigh
fading ``h_k`` and symbols ``s_k`` drawn from a constellation.  Because the
field is circularly symmetric every CF here is a function of ``|omega|``
only, and cumulants are quoted per real dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special, stats

from .errors import DomainError, ValidationError
from .geometry import NetworkConfig
from .numerics import derivative, gil_pelaez_cdf, kummer_deficit, ks_distance, QuadratureSpec

__all__ = [
    "Constellation",
    "SignalingMode",
    "EiDRepresentation",
    "cf_aggregate",
    "log_cf_aggregate",
    "numerical_cumulant",
    "cf_alpha_stable_limit",
    "cumulant",
    "moment_from_cumulants",
    "mean_power",
    "kurtosis",
    "eid_variances",
    "per_dimension_cdf",
    "ks_to_gaussian",
    "ks_to_alpha_stable",
]

_TOL = 1e-12


class Constellation:
    """A finite, equiprobable symbol alphabet with unit power and zero mean."""

    def __init__(self, symbols: Sequence[complex], name: str = "custom"):
        s = np.asarray(symbols, dtype=complex).ravel()
        if s.size == 0:
            raise ValidationError("constellation needs at least one symbol")
        if abs(np.mean(np.abs(s) ** 2) - 1.0) > _TOL:
            raise ValidationError("constellation must have unit average power")
        if abs(np.mean(s)) > _TOL:
            raise ValidationError("constellation must have zero mean")
        self.symbols = s
        self.name = name

    def __len__(self):
        return self.symbols.size

    def __repr__(self):
        return f"Constellation({self.name}, M={len(self)})"

    @property
    def M(self) -> int:
        return self.symbols.size

    def moment(self, p: float) -> float:
        """E|s|^p over equiprobable symbols."""
        return float(np.mean(np.abs(self.symbols) ** p))

    @classmethod
    def qam(cls, M: int) -> "Constellation":
        m = int(round(math.sqrt(M)))
        if m * m != M or m < 2:
            raise ValidationError("square QAM needs M = 4, 16, 64, ...")
        levels = np.arange(-(m - 1), m, 2, dtype=float)
        pts = (levels[:, None] + 1j * levels[None, :]).ravel()
        pts /= math.sqrt(np.mean(np.abs(pts) ** 2))
        return cls(pts, f"{M}-QAM")

    @classmethod
    def psk(cls, M: int) -> "Constellation":
        if M < 2:
            raise ValidationError("PSK needs M >= 2")
        pts = np.exp(2j * math.pi * np.arange(M) / M)
        if M == 2:
            pts = np.real(pts).astype(complex)
        # remove round-off from the symmetric sum
        pts = pts - np.mean(pts)
        pts /= math.sqrt(np.mean(np.abs(pts) ** 2))
        return cls(pts, f"{M}-PSK")

    @classmethod
    def bpsk(cls) -> "Constellation":
        return cls([1.0, -1.0], "BPSK")

    @classmethod
    def pam(cls, M: int) -> "Constellation":
        if M < 2:
            raise ValidationError("PAM needs M >= 2")
        lv = np.arange(-(M - 1), M, 2, dtype=float)
        lv /= math.sqrt(np.mean(lv ** 2))
        return cls(lv.astype(complex), f"{M}-PAM")

    @classmethod
    def from_name(cls, name: str) -> "Constellation":
        key = name.strip().lower().replace("-", "").replace("_", "")
        if key == "bpsk":
            return cls.bpsk()
        for suffix, fac in (("qam", cls.qam), ("psk", cls.psk), ("pam", cls.pam)):
            if key.endswith(suffix) and key[:-len(suffix)].isdigit():
                return fac(int(key[:-len(suffix)]))
        raise ValidationError(f"unknown constellation {name!r}")


@dataclass(frozen=True)
class SignalingMode:
    """Either the exact interfering constellation or Gaussian signaling.

    Gaussian signaling draws interfering symbols from CN(0, 1), for which
    ``E|s|^p = Gamma(1 + p/2)``.
    """

    kind: str = "gaussian"
    constellation: Constellation | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "gaussian"):
            raise ValidationError("signaling mode is 'exact' or 'gaussian'")
        if self.kind == "exact" and self.constellation is None:
            raise ValidationError("exact mode needs a constellation")

    @classmethod
    def exact(cls, constellation: Constellation) -> "SignalingMode":
        return cls("exact", constellation)

    @classmethod
    def gaussian(cls) -> "SignalingMode":
        return cls("gaussian", None)

    def moment(self, p: float) -> float:
        if self.kind == "gaussian":
            return float(special.gamma(1.0 + p / 2.0))
        return self.constellation.moment(p)


def _check(cfg: NetworkConfig, r0, need_r0=True) -> float:
    if not cfg.eta > 2:
        raise DomainError("interference power is infinite for eta <= 2")
    if r0 is None:
        r0 = cfg.exclusion_radius
    r0 = float(r0)
    if need_r0 and not r0 > 0:
        raise DomainError("exclusion radius r0 must be positive")
    return r0


def _energy_levels(c: Constellation):
    # distinct |s|^2 values and their probabilities
    e, cnt = np.unique(np.round(np.abs(c.symbols) ** 2, 12), return_counts=True)
    return e, cnt / cnt.sum()


def cf_aggregate(omega, cfg: NetworkConfig, mode: SignalingMode | None = None,
                 r0: float | None = None, *, form: str = "compact"):
    """CF of the aggregate interference at ``|omega|``.

    ``form`` picks the evaluation route: ``compact`` (1F1 for exact
    signaling, 2F1 for Gaussian signaling), ``gamma`` (incomplete-gamma
    form, finite constellations only), or
    ``series`` (the cumulant power series, small |omega| only).
    """
    mode = mode or SignalingMode.gaussian()
    r0 = _check(cfg, r0)
    w = np.abs(np.asarray(omega, dtype=float))
    lam, P, eta = cfg.lambda_bs, cfg.power, cfg.eta
    d = 2.0 / eta
    x = w * w * P / (4.0 * r0 ** eta)

    if form == "series":
        logc = np.zeros_like(x)
        for k in range(1, 200):
            term = 2 * math.pi * lam * r0 ** 2 * (-x) ** k * mode.moment(2 * k) \
                / ((eta * k - 2) * math.factorial(k))
            logc = logc + term
            if np.all(np.abs(term) <= 1e-15 * np.maximum(np.abs(logc), 1e-300)):
                break
        out = np.exp(logc)
    elif form == "gamma":
        if mode.kind == "gaussian":
            raise ValidationError("gamma form is defined for a finite constellation")
        a2 = np.abs(mode.constellation.symbols) ** 2
        acc = np.zeros_like(x)
        for e in a2:
            y = x * e
            acc = acc + r0 ** 2 * (-np.expm1(-y)) \
                - (y * r0 ** eta) ** d * special.gammainc(1 - d, y) * special.gamma(1 - d)
        out = np.exp(math.pi * lam * acc / a2.size)
    elif form == "compact":
        if mode.kind == "gaussian":
            expo = -math.pi * lam * P * w * w / (2 * (eta - 2) * r0 ** (eta - 2)) \
                * special.hyp2f1(1.0, 1 - d, 2 - d, -x)
            out = np.exp(expo)
        else:
            e, wts = _energy_levels(mode.constellation)
            acc = kummer_deficit(d, np.multiply.outer(x, e)) @ wts
            out = np.exp(math.pi * lam * r0 ** 2 * acc)
    else:
        raise ValidationError(f"unknown CF form {form!r}")
    return out if out.ndim else float(out)


def log_cf_aggregate(omega, cfg: NetworkConfig, mode: SignalingMode | None = None,
                     r0: float | None = None):
    """Natural log of the compact-form CF, without the exp/log round trip."""
    mode = mode or SignalingMode.gaussian()
    r0 = _check(cfg, r0)
    w = np.abs(np.asarray(omega, dtype=float))
    lam, P, eta = cfg.lambda_bs, cfg.power, cfg.eta
    d = 2.0 / eta
    x = w * w * P / (4.0 * r0 ** eta)
    if mode.kind == "gaussian":
        out = -math.pi * lam * P * w * w / (2 * (eta - 2) * r0 ** (eta - 2)) \
            * special.hyp2f1(1.0, 1 - d, 2 - d, -x)
    else:
        e, wts = _energy_levels(mode.constellation)
        out = math.pi * lam * r0 ** 2 * (kummer_deficit(d, np.multiply.outer(x, e)) @ wts)
    return out if np.ndim(out) else float(out)


def numerical_cumulant(n: int, cfg: NetworkConfig, mode: SignalingMode | None = None,
                       r0: float | None = None) -> float:
    """Per-dimension cumulant from finite differences of ln CF at the origin."""
    n = int(n)
    r0 = _check(cfg, r0)
    sd = math.sqrt(mean_power(cfg, r0) / 2.0)
    f = lambda w: log_cf_aggregate(w, cfg, mode, r0)
    d = derivative(f, 0.0, n, 0.5 / sd)
    # d^n ln phi / (j^n dw^n) for even n is (-1)^(n/2) times the real derivative
    if n % 2:
        return 0.0 if abs(d) < 1e-12 else float(d)
    return float((-1) ** (n // 2) * d)


def cf_alpha_stable_limit(omega, cfg: NetworkConfig, mode: SignalingMode | None = None):
    """CF of the interference with no exclusion region (symmetric alpha-stable)."""
    mode = mode or SignalingMode.gaussian()
    _check(cfg, 0.0, need_r0=False)
    eta = cfg.eta
    w = np.abs(np.asarray(omega, dtype=float))
    c = math.pi * cfg.lambda_bs * cfg.power ** (2 / eta) * mode.moment(4 / eta) \
        * special.gamma(1 - 2 / eta) / 2 ** (4 / eta)
    out = np.exp(-c * w ** (4 / eta))
    return out if out.ndim else float(out)


def cumulant(n: int, cfg: NetworkConfig, mode: SignalingMode | None = None,
             r0: float | None = None) -> float:
    """Per-dimension cumulant of order ``n`` (zero for odd orders)."""
    mode = mode or SignalingMode.gaussian()
    r0 = _check(cfg, r0)
    n = int(n)
    if n < 1:
        raise DomainError("cumulant order must be >= 1")
    if n % 2:
        return 0.0
    k = n // 2
    lam, P, eta = cfg.lambda_bs, cfg.power, cfg.eta
    return float(2 * math.pi * lam * r0 ** 2 * mode.moment(n)
                 * math.factorial(n) / ((eta * k - 2) * math.factorial(k))
                 * (P / (4 * r0 ** eta)) ** k)


def moment_from_cumulants(n: int, cumulants: Sequence[float]) -> float:
    """Raw moment of order ``n`` from cumulants ``[k1, k2, ...]``.

    Uses ``m_n = sum_{j=1}^{n} C(n-1, j-1) k_j m_{n-j}``.
    """
    n = int(n)
    if n < 0:
        raise DomainError("moment order must be >= 0")
    if len(cumulants) < n:
        raise DomainError(f"need cumulants through order {n}, got {len(cumulants)}")
    k = [0.0] + [float(c) for c in cumulants]
    m = [1.0]
    for i in range(1, n + 1):
        m.append(sum(math.comb(i - 1, j - 1) * k[j] * m[i - j] for j in range(1, i + 1)))
    return m[n]


def mean_power(cfg: NetworkConfig, r0: float | None = None) -> float:
    """E|i|^2 = 2 pi lam P r0^(2-eta) / (eta - 2)."""
    r0 = _check(cfg, r0)
    return 2 * math.pi * cfg.lambda_bs * cfg.power * r0 ** (2 - cfg.eta) / (cfg.eta - 2)


def kurtosis(cfg: NetworkConfig, mode: SignalingMode | None = None, r0: float | None = None) -> float:
    """Per-dimension excess kurtosis ``k4 / k2^2``."""
    mode = mode or SignalingMode.gaussian()
    r0 = _check(cfg, r0)
    eta = cfg.eta
    return 3 * (eta - 2) ** 2 * mode.moment(4) / (4 * math.pi * cfg.lambda_bs * (eta - 1) * r0 ** 2)


@dataclass(frozen=True)
class EiDRepresentation:
    """Variances of the conditionally Gaussian equivalent of the interference.

    ``cf(omega)`` rebuilds ``exp(sum_q (-s_q^2 |omega|^2 / 4)^q)`` from the
    first ``truncation_order`` terms; ``truncation_bound(omega)`` is the
    magnitude of the first omitted exponent term.
    """

    variances: tuple
    truncation_order: int
    next_variance: float = field(default=float("nan"))

    def cf(self, omega):
        w = np.asarray(omega, dtype=float)
        s = np.zeros_like(w)
        for q, v in enumerate(self.variances, start=1):
            s = s + (-v * w * w / 4.0) ** q
        out = np.exp(s)
        return out if out.ndim else float(out)

    def truncation_bound(self, omega) -> float:
        w = float(np.max(np.abs(omega)))
        Q = self.truncation_order
        return float((self.next_variance * w * w / 4.0) ** (Q + 1))


def eid_variances(cfg: NetworkConfig, constellation: Constellation | SignalingMode,
                  r0: float | None = None, truncation: int = 12, *,
                  omega_max: float | None = None, term_tol: float = 1e-12,
                  max_order: int = 400) -> EiDRepresentation:
    """Variances sigma_q^2, q = 1..Q, of the equivalent-in-distribution form.

    With ``omega_max`` the order grows past ``truncation`` until the first
    omitted exponent term at ``|omega| = omega_max`` is below ``term_tol``
    and the terms are past their peak.
    """
    r0 = _check(cfg, r0)
    Q = int(truncation)
    if Q < 1:
        raise DomainError("truncation order must be >= 1")
    mode = constellation if isinstance(constellation, SignalingMode) \
        else SignalingMode.exact(constellation)
    lam, P, eta = cfg.lambda_bs, cfg.power, cfg.eta

    def sig(q):
        # logs keep P^q and r0^(-eta q) in range for large q
        lg = (math.log(2 * math.pi * lam) + (2 - eta * q) * math.log(r0) + q * math.log(P)
              + math.log(mode.moment(2 * q)) - math.log(eta * q - 2) - math.lgamma(q + 1))
        return math.exp(lg / q)

    if omega_max is not None:
        u = float(omega_max) ** 2 / 4.0
        term = lambda q: (sig(q) * u) ** q
        while Q < max_order and (term(Q + 1) > term_tol or term(Q + 1) > term(Q)):
            Q += 1
    return EiDRepresentation(tuple(sig(q) for q in range(1, Q + 1)), Q, sig(Q + 1))


# ---------------------------------------------------------------------------
# per-dimension distribution comparisons


def per_dimension_cdf(x, cfg: NetworkConfig, mode: SignalingMode | None = None,
                      r0: float | None = None, spec: QuadratureSpec | None = None):
    """CDF of Re(i) by Gil-Pelaez inversion of the (real, even) CF."""
    spec = spec or QuadratureSpec(abs_tol=1e-9, rel_tol=1e-7)
    if r0 is not None and r0 == 0:
        cf = lambda w: cf_alpha_stable_limit(w, cfg, mode)
    else:
        cf = lambda w: cf_aggregate(w, cfg, mode, r0)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([gil_pelaez_cdf(cf, v, spec) for v in xs])
    return out if np.ndim(x) else float(out[0])


def _ks_grid(cfg, r0, points):
    sd = math.sqrt(mean_power(cfg, r0) / 2.0)
    return np.linspace(-6 * sd, 6 * sd, points)


def ks_to_gaussian(cfg: NetworkConfig, mode: SignalingMode | None = None,
                   r0: float | None = None, points: int = 121) -> float:
    """KS distance between Re(i) and a Gaussian with the same variance."""
    r0 = _check(cfg, r0)
    sd = math.sqrt(cumulant(2, cfg, mode, r0))
    grid = _ks_grid(cfg, r0, points)
    F = lambda g: per_dimension_cdf(g, cfg, mode, r0)
    return ks_distance(F, lambda g: stats.norm.cdf(g, scale=sd), grid)


def ks_to_alpha_stable(cfg: NetworkConfig, mode: SignalingMode | None = None,
                       r0: float | None = None, points: int = 121) -> float:
    """KS distance between Re(i) and its r0 = 0 alpha-stable limit."""
    r0 = _check(cfg, r0)
    grid = _ks_grid(cfg, r0, points)
    F = lambda g: per_dimension_cdf(g, cfg, mode, r0)
    G = lambda g: per_dimension_cdf(g, cfg, mode, 0.0)
    return ks_distance(F, G, grid)
