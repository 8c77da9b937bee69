"""Monte-Carlo oracle for interference, SINR and symbol errors.

Realizations are grouped in fixed-size blocks.  Each block draws from its own
Philox stream keyed by ``(seed, block index, purpose)``, so the samples do not
depend on how many workers process the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import special
from scipy.spatial import cKDTree

from .errors import DomainError, UnsupportedConfigurationError, ValidationError
from .geometry import AnnularRegion, NetworkConfig, TierSet, default_outer_radius
from .interference import Constellation, SignalingMode

__all__ = [
    "SCENARIOS",
    "SimulationPlan",
    "EmpiricalDistribution",
    "block_rng",
    "simulate_downlink_field",
    "simulate_sinr",
    "simulate_symbol_errors",
    "simulate_uplink",
]

SCENARIOS = ("fixed_r0", "random_r0", "load_aware", "multitier", "reuse",
             "uplink", "nakagami", "mrc", "comp")

_TAGS = {"field": 1, "sinr": 2, "symbols": 3, "uplink": 4}


def block_rng(seed: int, block: int, purpose: str = "sinr") -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), int(block), _TAGS[purpose]])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SimulationPlan:
    """What to simulate and how many times.

    Scenario parameters that do not apply to the chosen scenario are ignored,
    except that ``delta``, ``p``, ``n_r`` and ``m`` may be combined freely
    with the single-tier downlink scenarios (for example reuse with MRC).
    """

    scenario: str
    cfg: NetworkConfig
    realizations: int = 10_000
    seed: int = 0
    r0: float | None = None
    p: float = 1.0
    tiers: TierSet | None = None
    delta: int = 1
    rho: float = 1.0
    m: int = 1
    n_r: int = 1
    n: int = 1
    symbols_per_realization: int = 1
    region: AnnularRegion | None = None
    nearest: int = 256
    block_size: int = 8192
    workers: int | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.realizations < 1 or self.symbols_per_realization < 1:
            raise ValidationError("realizations and symbols_per_realization must be >= 1")
        if not 0 < self.p <= 1:
            raise DomainError("activity probability p must lie in (0, 1]")
        for name in ("delta", "m", "n_r", "n", "nearest", "block_size"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.rho <= 0:
            raise DomainError("rho must be positive")
        if self.scenario == "fixed_r0" and self._r0() is None:
            raise ValidationError("fixed_r0 needs r0 (or cfg.exclusion_radius)")
        if self.scenario == "multitier" and self.tiers is None:
            raise ValidationError("multitier needs tiers")
        if self.nearest <= self.delta + self.n:
            raise ValidationError("nearest must exceed delta + n")

    def _r0(self):
        if self.r0 is not None:
            return float(self.r0)
        return self.cfg.exclusion_radius or None

    def with_(self, **kw) -> "SimulationPlan":
        return replace(self, **kw)

    @property
    def total(self) -> int:
        return self.realizations * self.symbols_per_realization

    def blocks(self):
        n, b = self.total, self.block_size
        return [(i, min(b, n - i * b)) for i in range((n + b - 1) // b)]


def _run_blocks(plan: SimulationPlan, fn: Callable[[int, int], np.ndarray]) -> np.ndarray:
    jobs = plan.blocks()
    workers = plan.workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        parts = [fn(i, n) for i, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda j: fn(*j), jobs))
    return np.concatenate(parts)


class EmpiricalDistribution:
    """Sorted samples with a step CDF and normal-approximation intervals."""

    def __init__(self, samples):
        s = np.sort(np.asarray(samples, dtype=float).ravel())
        if s.size == 0:
            raise ValidationError("need at least one sample")
        self.sorted_samples = s

    @property
    def n(self) -> int:
        return self.sorted_samples.size

    def cdf(self, x):
        """Fraction of samples strictly below ``x``; matches P{X < x}."""
        v = np.searchsorted(self.sorted_samples, np.asarray(x, dtype=float), side="left") / self.n
        return v if np.ndim(v) else float(v)

    def se(self, x):
        p = np.asarray(self.cdf(x))
        out = np.sqrt(p * (1 - p) / self.n)
        return out if out.ndim else float(out)

    def ci(self, x, level: float = 0.95):
        z = special.ndtri(0.5 + level / 2)
        p, e = np.asarray(self.cdf(x)), np.asarray(self.se(x))
        lo, hi = np.clip(p - z * e, 0, 1), np.clip(p + z * e, 0, 1)
        return (lo, hi) if lo.ndim else (float(lo), float(hi))

    def mean(self, fn=None):
        """Sample mean of ``fn(samples)`` and its standard error."""
        v = self.sorted_samples if fn is None else fn(self.sorted_samples)
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.inf


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


def _symbols(rng, mode: SignalingMode, shape):
    if mode.kind == "gaussian":
        return _cn(rng, shape)
    S = mode.constellation.symbols
    return S[rng.integers(0, S.size, shape)]


def _tail_power(lam, power, eta, R):
    # expected power of a unit-fading PPP beyond radius R
    return 2 * math.pi * lam * power * R ** (2 - eta) / (eta - 2)


def simulate_downlink_field(cfg: NetworkConfig, mode: SignalingMode, r0: float | None,
                            plan: SimulationPlan, *, tail_compensation: bool = True) -> np.ndarray:
    """Complex aggregate interference samples, one per realization.

    Interferers form a PPP on the annulus ``[r0, R]``; the neglected field
    beyond ``R`` is added as a circular Gaussian of matching power unless
    ``tail_compensation`` is off.
    """
    r0 = cfg.exclusion_radius if r0 is None else r0
    region = plan.region or AnnularRegion(r0, default_outer_radius(cfg.lambda_bs, r0))
    a2, b2 = region.inner_radius ** 2, region.outer_radius ** 2
    lam, P, eta = cfg.lambda_bs, cfg.power, cfg.eta
    mu = lam * region.area
    tail = _tail_power(lam, P, eta, region.outer_radius) if tail_compensation else 0.0

    def block(i, n):
        rng = block_rng(plan.seed, i, "field")
        cnt = rng.poisson(mu, n)
        tot = int(cnt.sum())
        r = np.sqrt(a2 + rng.random(tot) * (b2 - a2))
        v = math.sqrt(P) * r ** (-eta / 2) * _cn(rng, tot) * _symbols(rng, mode, tot)
        idx = np.repeat(np.arange(n), cnt)
        out = np.bincount(idx, v.real, n) + 1j * np.bincount(idx, v.imag, n)
        if tail > 0:
            out = out + math.sqrt(tail) * _cn(rng, n)
        return out

    return _run_blocks(plan.with_(symbols_per_realization=1), block)


def _ordered(rng, lam, n, K, r0=0.0):
    # distances of the K nearest PPP points outside radius r0
    u = np.cumsum(rng.standard_exponential((n, K)), axis=1)
    return np.sqrt(r0 * r0 + u / (math.pi * lam))


def _gain(rng, shape, size):
    # unit-mean Gamma(shape, 1/shape)
    if shape == 1:
        return rng.standard_exponential(size)
    return rng.standard_gamma(shape, size) / shape


def _downlink_block(plan: SimulationPlan, i: int, n: int) -> np.ndarray:
    rng = block_rng(plan.seed, i, "sinr")
    cfg, K = plan.cfg, plan.nearest
    lam, P, eta, N0 = cfg.lambda_bs, cfg.power, cfg.eta, cfg.noise
    sc = plan.scenario
    m = plan.m if sc == "nakagami" else 1
    if sc == "fixed_r0":
        r0 = plan._r0()
        r = _ordered(rng, lam, n, K, r0)
        serving = np.full(n, r0)
        first = 0
    else:
        r = _ordered(rng, lam, n, K)
        serving = r[:, 0]
        first = 1
    # coordinated transmitters join the signal, reuse-protected BSs stay silent
    n_coop = plan.n if sc == "comp" else 1
    sig_d = r[:, :n_coop - 1 + first] if sc != "fixed_r0" else serving[:, None]
    start = n_coop - 1 + first + (plan.delta - 1)
    intf = r[:, start:]
    keep = 1.0 / plan.delta * plan.p
    g = _gain(rng, m, intf.shape)
    if keep < 1:
        g = g * (rng.random(intf.shape) < keep)
    I = P * np.sum(g * intf ** (-eta), axis=1)
    I += keep * _tail_power(lam, P, eta, 1.0) * r[:, -1] ** (2 - eta)
    if sc == "comp":
        S = P * rng.standard_exponential(n) * np.sum(sig_d ** (-eta), axis=1)
    else:
        shape = plan.n_r * m
        h0 = rng.standard_gamma(shape, n) / m
        S = P * h0 * serving ** (-eta)
    return S / (I + N0)


def _multitier_block(plan: SimulationPlan, i: int, n: int) -> np.ndarray:
    rng = block_rng(plan.seed, i, "sinr")
    tiers, K, N0 = plan.tiers, plan.nearest, plan.cfg.noise
    d = [_ordered(rng, t.lambda_bs, n, K) for t in tiers]
    biased = np.column_stack([t.bias * t.power * dk[:, 0] ** (-t.eta) for t, dk in zip(tiers, d)])
    k = np.argmax(biased, axis=1)
    S = np.zeros(n)
    I = np.zeros(n)
    for j, (t, dk) in enumerate(zip(tiers, d)):
        rx = t.power * _gain(rng, 1, dk.shape) * dk ** (-t.eta)
        sel = k == j
        S[sel] = rx[sel, 0]
        I += rx.sum(axis=1) - np.where(sel, rx[:, 0], 0.0)
        I += _tail_power(t.lambda_bs, t.power, t.eta, 1.0) * dk[:, -1] ** (2 - t.eta)
    return S / (I + N0)


def simulate_sinr(plan: SimulationPlan) -> EmpiricalDistribution:
    """Empirical SINR distribution of the typical user (or test BS for uplink).

    Each realization keeps the ``plan.nearest`` closest BSs explicitly and
    replaces the field beyond them by its exact conditional mean power.
    """
    if plan.scenario == "uplink":
        return simulate_uplink(plan.cfg.lambda_bs, plan.rho, plan)
    fn = _multitier_block if plan.scenario == "multitier" else _downlink_block
    return EmpiricalDistribution(_run_blocks(plan, lambda i, n: fn(plan, i, n)))


def simulate_symbol_errors(cfg: NetworkConfig, constellation: Constellation, mode: SignalingMode,
                           plan: SimulationPlan):
    """Symbol error rate of a coherent minimum-distance detector at fixed r0.

    Every symbol sees an independent field.  The ``plan.nearest`` closest
    interferers are explicit and the remainder is a circular Gaussian of the
    matching conditional power.  Returns ``(sep, standard_error)``.
    """
    r0 = plan._r0() if plan.r0 is not None or cfg.exclusion_radius else None
    if r0 is None or not r0 > 0:
        raise ValidationError("symbol simulation needs a positive r0")
    lam, P, eta, N0 = cfg.lambda_bs, cfg.power, cfg.eta, cfg.noise
    S = constellation.symbols
    K = plan.nearest
    a_scale = math.sqrt(P) * r0 ** (-eta / 2)

    def block(i, n):
        rng = block_rng(plan.seed, i, "symbols")
        r = _ordered(rng, lam, n, K, r0)
        v = math.sqrt(P) * r ** (-eta / 2) * _cn(rng, r.shape) * _symbols(rng, mode, r.shape)
        tail = _tail_power(lam, P, eta, 1.0) * r[:, -1] ** (2 - eta)
        i_agg = v.sum(axis=1) + np.sqrt(tail) * _cn(rng, n)
        k = rng.integers(0, S.size, n)
        a = a_scale * _cn(rng, n)
        y = a * S[k] + i_agg
        if N0 > 0:
            y = y + math.sqrt(N0) * _cn(rng, n)
        det = np.argmin(np.abs(y[:, None] / a[:, None] - S[None, :]), axis=1)
        return (det != k).astype(np.int8)

    err = _run_blocks(plan, block)
    p = float(err.mean())
    return p, math.sqrt(p * (1 - p) / err.size)


def _uplink_realization(rng, lam, rho, eta, N0, R, oversample, tail):
    n_bs = rng.poisson(lam * math.pi * R * R)
    rr = R * np.sqrt(rng.random(n_bs))
    th = rng.random(n_bs) * 2 * math.pi
    bs = np.vstack(([0.0, 0.0], np.column_stack((rr * np.cos(th), rr * np.sin(th)))))
    n_c = rng.poisson(oversample * lam * math.pi * R * R)
    rc = R * np.sqrt(rng.random(n_c))
    tc = rng.random(n_c) * 2 * math.pi
    cand = np.column_stack((rc * np.cos(tc), rc * np.sin(tc)))
    _, owner = cKDTree(bs).query(cand)
    # pick one candidate per cell uniformly: random keys, first per owner
    order = np.lexsort((rng.random(n_c), owner))
    owner_s = owner[order]
    first = np.ones(n_c, bool)
    first[1:] = owner_s[1:] != owner_s[:-1]
    ue_idx = order[first]
    cells = owner[ue_idx]
    ue = cand[ue_idx]
    if cells.size == 0 or cells[0] != 0:
        return None
    d_own = np.hypot(*(ue - bs[cells]).T)
    d_test = np.hypot(ue[:, 0], ue[:, 1])
    h = rng.standard_exponential(cells.size)
    S = rho * h[0]
    I = np.sum(rho * d_own[1:] ** eta * h[1:] * d_test[1:] ** (-eta)) + tail
    return S / (I + N0)


def simulate_uplink(lambda_bs: float, rho: float, plan: SimulationPlan, *,
                    cells: int = 150, oversample: float = 25.0) -> EmpiricalDistribution:
    """Uplink SINR at a test BS at the origin under full channel inversion.

    BSs form a PPP on a disk holding about ``cells`` BSs plus the test BS.
    Every cell serves one UE placed uniformly in it, found by assigning a
    dense candidate PPP to the nearest BS.  Cells left without a candidate
    stay silent; at the default oversampling this affects well under 1e-4
    of cells.  UEs outside the disk add their mean power, approximating the
    in-cell distance by the nearest-BS law: ``2 rho / cells`` at eta = 4.
    """
    if rho <= 0:
        raise DomainError("rho must be positive")
    eta, N0 = plan.cfg.eta, plan.cfg.noise
    R = math.sqrt(cells / (math.pi * lambda_bs))
    # E[R^eta] under the nearest-distance law times the PPP integral beyond R
    e_own = math.gamma(1 + eta / 2) / (math.pi * lambda_bs) ** (eta / 2)
    tail = rho * e_own * 2 * math.pi * lambda_bs * R ** (2 - eta) / (eta - 2)

    def block(i, n):
        rng = block_rng(plan.seed, i, "uplink")
        out = np.empty(n)
        for j in range(n):
            v = None
            while v is None:
                v = _uplink_realization(rng, lambda_bs, rho, eta, N0, R, oversample, tail)
            out[j] = v
        return out

    small = plan.with_(block_size=min(plan.block_size, 256), symbols_per_realization=1)
    return EmpiricalDistribution(_run_blocks(small, block))
