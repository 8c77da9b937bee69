"""Symbol error probability, SINR outage and ergodic rate from Laplace transforms.

All error-probability evaluators share one kernel, :func:`hamdi_expectation`,
which turns ``E[erfc^c(sqrt(Y / (X + C)))]`` into a single semi-infinite
integral of the transform of ``X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import DomainError, UnsupportedConfigurationError, ValidationError
from .geometry import NetworkConfig
from .interference import Constellation
from .numerics import integrate_semi_infinite, lt_derivative, QuadratureSpec
from .transforms import LaplaceTransform, lt_zeta

__all__ = [
    "ModulationScheme",
    "asep_awgn",
    "hamdi_expectation",
    "asep_eid",
    "asep_gaussian",
    "sinr_cdf",
    "sinr_cdf_gamma",
    "RateResult",
    "ergodic_rate",
    "ber_outage_threshold",
    "rate_outage_threshold",
]

_SPEC = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9)


@dataclass(frozen=True)
class ModulationScheme:
    """Weights ``w_c`` and SNR scalings ``beta_c`` of the SEP expression.

    The symbol error probability over AWGN at SNR ``g`` is
    ``sum_c w_c erfc^c(sqrt(beta_c g))``; rows with ``w_c = 0`` are omitted.
    """

    name: str
    rows: tuple
    M: int

    def __post_init__(self):
        if not self.rows or self.rows[0][0] != 1 or not self.rows[0][1] > 0:
            raise ValidationError("first row must be c = 1 with w_1 > 0")
        for c, w, b in self.rows:
            if c not in (1, 2) or not b > 0:
                raise ValidationError("rows need c in {1, 2} and beta > 0")

    @property
    def w1(self) -> float:
        return self.rows[0][1]

    @property
    def beta1(self) -> float:
        return self.rows[0][2]

    @classmethod
    def bpsk(cls):
        return cls("BPSK", ((1, 0.5, 0.5),), 2)

    @classmethod
    def bfsk(cls):
        return cls("BFSK", ((1, 0.5, 1.0),), 2)

    @classmethod
    def qpsk(cls):
        return cls("QPSK", ((1, 1.0, 0.5), (2, -0.25, 0.5)), 4)

    @classmethod
    def mqam(cls, M: int):
        q = math.isqrt(M)
        if q * q != M or q < 2:
            raise ValidationError("M-QAM needs a square M >= 4")
        r = (q - 1) / q
        b = 3.0 / (2.0 * (M - 1))
        return cls(f"{M}-QAM", ((1, 2 * r, b), (2, -r * r, b)), M)

    @classmethod
    def mpam(cls, M: int):
        if M < 2:
            raise ValidationError("M-PAM needs M >= 2")
        return cls(f"{M}-PAM", ((1, (M - 1) / M, 3.0 / (M * M - 1)),), M)

    @classmethod
    def mpsk_ub(cls, M: int):
        # erfc(sqrt(g) sin(pi/M)) written as erfc(sqrt(beta g)) needs beta = sin^2
        if M < 2:
            raise ValidationError("M-PSK needs M >= 2")
        return cls(f"{M}-PSK-UB", ((1, 1.0, math.sin(math.pi / M) ** 2),), M)

    @classmethod
    def de_bpsk(cls):
        # differential decoding errs when exactly one of two symbols errs: 2p(1-p)
        return cls("DE-BPSK", ((1, 1.0, 1.0), (2, -0.5, 1.0)), 2)

    @classmethod
    def msk(cls):
        return cls("MSK", ((1, 0.5, 1.0),), 2)

    @classmethod
    def from_name(cls, name: str):
        key = name.strip().upper().replace("_", "-")
        simple = {"BPSK": cls.bpsk, "BFSK": cls.bfsk, "QPSK": cls.qpsk,
                  "DE-BPSK": cls.de_bpsk, "DEBPSK": cls.de_bpsk, "MSK": cls.msk}
        if key in simple:
            return simple[key]()
        for suffix, fac in (("-PSK-UB", cls.mpsk_ub), ("PSK-UB", cls.mpsk_ub),
                            ("-QAM", cls.mqam), ("QAM", cls.mqam),
                            ("-PAM", cls.mpam), ("PAM", cls.mpam)):
            if key.endswith(suffix) and key[:-len(suffix)].isdigit():
                return fac(int(key[:-len(suffix)]))
        raise ValidationError(f"unknown modulation {name!r}")

    def constellation(self) -> Constellation:
        """Matching symbol alphabet for simulation (QAM, QPSK and BPSK only)."""
        if self.name.endswith("-QAM"):
            return Constellation.qam(self.M)
        if self.name == "QPSK":
            return Constellation.qam(4)
        if self.name == "BPSK":
            return Constellation.bpsk()
        raise UnsupportedConfigurationError(f"no simulation alphabet for {self.name}")


def asep_awgn(snr, scheme: ModulationScheme):
    """SEP over AWGN at SNR ``snr``."""
    s = np.asarray(snr, dtype=float)
    if np.any(s < 0):
        raise DomainError("snr must be nonnegative")
    out = np.zeros_like(s)
    for c, w, b in scheme.rows:
        out = out + w * special.erfc(np.sqrt(b * s)) ** c
    return out if out.ndim else float(out)


def _inner_erfc2(z: float, m: int) -> float:
    """∫_1^∞ 1F1(m+1; 2; -z(1+u^2)) du, via Kummer's transformation."""
    if m == 1:
        return math.exp(-z) * math.sqrt(math.pi) * special.erfc(math.sqrt(z)) / (2 * math.sqrt(z))
    g = lambda u: math.exp(-z * (1 + u * u)) * special.hyp1f1(1 - m, 2.0, z * (1 + u * u))
    v, _ = integrate.quad(g, 1.0, np.inf, epsabs=1e-14, epsrel=1e-11, limit=200)
    return v


def hamdi_expectation(power: int, m: int, C: float, lt_x: Callable[[float], float],
                      spec: QuadratureSpec = _SPEC) -> float:
    """E[erfc^c(sqrt(Y / (X + C)))] with ``Y ~ Gamma(m, 1/m)`` (unit mean).

    ``lt_x`` is the Laplace transform of ``X >= 0``.  For ``m = 1``

        c = 1:  1 - (1/sqrt(pi)) ∫ z^-1/2 e^{-z(1+C)} L(z) dz
        c = 2:  1 - (2/sqrt(pi)) ∫ z^-1/2 e^{-z(1+C)} erfc(sqrt z) L(z) dz

    and for integer ``m > 1`` the general single-integral forms are used.
    """
    c = int(power)
    if c not in (1, 2):
        raise DomainError("power must be 1 or 2")
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise UnsupportedConfigurationError("gamma shape m must be an integer >= 1")
    m = int(m)
    if C < 0:
        raise DomainError("C must be nonnegative")
    if math.isinf(C):
        return 1.0
    if m == 1:
        if c == 1:
            f = lambda z: math.exp(-z * (1 + C)) * lt_x(z) / math.sqrt(z)
            k = 1.0 / math.sqrt(math.pi)
        else:
            f = lambda z: math.exp(-z * (1 + C)) * special.erfc(math.sqrt(z)) * lt_x(z) / math.sqrt(z)
            k = 2.0 / math.sqrt(math.pi)
        val = integrate_semi_infinite(f, 0.0, spec, singular=True, scale=1.0 / (1.0 + C))
        return 1.0 - k * val
    if c == 1:
        k = math.exp(math.lgamma(m + 0.5) - math.lgamma(m)) * 2.0 / math.pi
        f = lambda z: math.exp(-z * (1 + m * C)) * special.hyp1f1(1 - m, 1.5, z) * lt_x(m * z) / math.sqrt(z)
        val = integrate_semi_infinite(f, 0.0, spec, singular=True, scale=1.0 / (1.0 + m * C))
        return 1.0 - k * val
    f = lambda z: math.exp(-z * m * C) * lt_x(m * z) * _inner_erfc2(z, m)
    val = integrate_semi_infinite(f, 0.0, spec, singular=True, scale=1.0 / (1.0 + m * C))
    return 1.0 - 4.0 * m / math.pi * val


def asep_eid(r0: float, cfg: NetworkConfig, constellation: Constellation,
             scheme: ModulationScheme) -> float:
    """ASEP with exact interfering symbols and Rayleigh intended fading.

    Interference given the geometry and symbols is complex Gaussian with
    variance ``sum_k P |s_k|^2 r_k^-eta``, whose transform is :func:`lt_zeta`.
    """
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    lam, P, eta = cfg.lambda_bs, cfg.power, cfg.eta
    total = 0.0
    for c, w, b in scheme.rows:
        C = cfg.noise * r0 ** eta / (P * b)
        L = lambda s, b=b: lt_zeta(s / b, lam, r0, eta, constellation)
        total += w * hamdi_expectation(c, 1, C, L)
    return float(total)


def _fixed_mode(cfg, r0):
    if (cfg is None) != (r0 is None):
        raise ValidationError("fixed-r0 mode needs both cfg and r0")
    return cfg is not None


def asep_gaussian(scheme: ModulationScheme, lt: Callable, cfg: NetworkConfig | None = None,
                  r0: float | None = None, *, m: int = 1) -> float:
    """ASEP with Gaussian interfering symbols.

    Giving ``cfg`` and ``r0`` selects the fixed-distance mode, where ``lt`` is
    in 1/W and noise enters through ``C = N0 r0^eta / (P beta_c)``.  Without
    them ``lt`` is a normalised, interference-limited transform.  ``m`` is the
    Nakagami shape of the intended link (1 for Rayleigh).
    """
    fixed = _fixed_mode(cfg, r0)
    total = 0.0
    for c, w, b in scheme.rows:
        if fixed:
            k = r0 ** cfg.eta / (cfg.power * b)
            C = cfg.noise * k
            L = lambda s, k=k: lt(s * k)
        else:
            C = 0.0
            L = lambda s, b=b: lt(s / b)
        total += w * hamdi_expectation(c, m, C, L)
    return float(total)


def sinr_cdf(T: float, lt: Callable, cfg: NetworkConfig | None = None,
             r0: float | None = None) -> float:
    """P{SINR < T} with Rayleigh intended fading."""
    if T < 0:
        raise DomainError("threshold must be nonnegative")
    if T == 0:
        return 0.0
    if _fixed_mode(cfg, r0):
        z = T * r0 ** cfg.eta / cfg.power
        return float(1.0 - math.exp(-z * cfg.noise) * lt(z))
    return float(1.0 - lt(T))


_MAX_SHAPE = 8


def sinr_cdf_gamma(T: float, shape: int, lt, cfg: NetworkConfig | None = None,
                   r0: float | str | None = None, *, gain_scale: float = 1.0) -> float:
    """P{SINR < T} when the intended gain is Gamma(shape, gain_scale).

    ``shape = N_r`` with unit scale models MRC; ``shape = m`` with scale
    ``1/m`` models unit-mean Nakagami-m.

    Modes:

    * ``r0`` a number: ``lt`` is the conditional transform in 1/W and
      ``1 - sum_u (-z)^u / u! d^u[e^{-z N0} L(z)]`` at ``z = T r0^eta/(P theta)``.
    * ``r0 == "averaged"``: ``lt`` is a factory ``r0 -> transform`` and the
      conditional CDF is averaged against the nearest-BS distance density.
    * ``cfg`` and ``r0`` omitted: ``lt`` is a distance-averaged normalised
      transform; averaging commutes with the derivatives, so the same sum
      is applied to it directly at ``a = T/theta``.
    """
    U = int(shape)
    if U < 1:
        raise DomainError("shape must be >= 1")
    if U > _MAX_SHAPE:
        raise UnsupportedConfigurationError(f"shape above {_MAX_SHAPE} exceeds derivative accuracy")
    if T < 0:
        raise DomainError("threshold must be nonnegative")
    if T == 0:
        return 0.0

    def series(F, z):
        s = 0.0
        for u in range(U):
            s += (-z) ** u / math.factorial(u) * lt_derivative(F, u, z)
        return 1.0 - s

    if isinstance(r0, str):
        if r0 != "averaged" or cfg is None:
            raise ValidationError("averaged mode needs r0='averaged' and a cfg")
        lam = cfg.lambda_bs

        def cond(u):
            r = math.sqrt(u / (math.pi * lam))
            return sinr_cdf_gamma(T, U, lt(r), cfg, r, gain_scale=gain_scale)

        # u = pi lam r0^2 is unit exponential; cond(u) -> 0 as u -> 0
        val, _ = integrate.quad(lambda u: math.exp(-u) * cond(u) if u > 0 else 0.0, 0.0, np.inf,
                                epsabs=1e-10, epsrel=1e-8, limit=200)
        return float(val)

    if _fixed_mode(cfg, r0):
        z = T * r0 ** cfg.eta / (cfg.power * gain_scale)
        N0 = cfg.noise
        F = (lambda s: math.exp(-s * N0) * lt(s)) if N0 > 0 else lt
        return float(series(F, z))
    return float(series(lt, T / gain_scale))


class RateResult(float):
    """Ergodic rate in nats per channel use; ``divergent`` flags an infinite rate."""

    def __new__(cls, value, divergent=False):
        obj = super().__new__(cls, value)
        obj.divergent = bool(divergent)
        return obj


def ergodic_rate(lt: Callable, cfg: NetworkConfig | None = None, r0: float | None = None,
                 spec: QuadratureSpec = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-8)) -> RateResult:
    """E ln(1 + SINR) = ∫_0^∞ (1 - F(t)) / (1 + t) dt, integrated in ``v = ln(1 + t)``."""
    fixed = _fixed_mode(cfg, r0)
    noiseless = (not fixed) or cfg.noise == 0
    is_none = getattr(lt, "scenario", None) == "none" or lt(1e12) >= 1.0 - 1e-15
    if noiseless and is_none:
        return RateResult(math.inf, divergent=True)

    def tail(v):
        t = math.expm1(v)
        return 1.0 - sinr_cdf(t, lt, cfg, r0)

    return RateResult(integrate_semi_infinite(tail, 0.0, spec, scale=2.0))


def ber_outage_threshold(epsilon: float, scheme: ModulationScheme) -> float:
    """SINR threshold at which the dominant SEP term equals ``epsilon``.

    ``T = erfcinv(epsilon / w_1)^2 / beta_1``; ``epsilon = w_1`` gives 0 and
    ``epsilon = 0`` gives infinity.
    """
    w1, b1 = scheme.w1, scheme.beta1
    if epsilon < 0 or epsilon > w1:
        raise DomainError(f"epsilon must lie in [0, w_1 = {w1}]")
    if epsilon == 0:
        return math.inf
    return float(special.erfcinv(epsilon / w1) ** 2 / b1)


def rate_outage_threshold(rate: float) -> float:
    """SINR threshold ``e^R - 1`` for a target rate ``R`` in nats."""
    if rate < 0:
        raise DomainError("rate must be nonnegative")
    return math.expm1(rate)
