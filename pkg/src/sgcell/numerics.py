"""Numerical kernels shared by the analytical modules.

Special functions delegate to :mod:`scipy.special`; the wrappers here only
add domain checks and a cancellation-free path for ``1 - 1F1(-d; 1-d; -x)``
at small ``x``.  Quadrature wraps QUADPACK with an adaptive cutoff for
semi-infinite ranges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, DomainError, ValidationError

__all__ = [
    "TailPolicy",
    "QuadratureSpec",
    "DEFAULT_SPEC",
    "eval_special",
    "kummer_1f1",
    "kummer_deficit",
    "gauss_2f1",
    "lower_incomplete_gamma",
    "integrate_semi_infinite",
    "gil_pelaez_density",
    "gil_pelaez_cdf",
    "finite_difference_weights",
    "derivative",
    "lt_derivative",
    "ks_distance",
]


class TailPolicy(str, enum.Enum):
    EXPONENTIAL_DECAY_DETECT = "exponential-decay-detect"
    FIXED_UPPER_BOUND = "fixed-upper-bound"


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and limits for the quadrature routines.

    ``upper_bound`` is only consulted with the fixed-upper-bound policy.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 60
    tail_cutoff_policy: TailPolicy = TailPolicy.EXPONENTIAL_DECAY_DETECT
    upper_bound: float | None = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError("abs_tol and rel_tol must be positive")
        if int(self.max_subdivisions) < 1:
            raise ValidationError("max_subdivisions must be >= 1")
        object.__setattr__(self, "tail_cutoff_policy", TailPolicy(self.tail_cutoff_policy))
        if self.tail_cutoff_policy is TailPolicy.FIXED_UPPER_BOUND:
            if self.upper_bound is None or not self.upper_bound > 0:
                raise ValidationError("fixed-upper-bound policy needs a positive upper_bound")


DEFAULT_SPEC = QuadratureSpec()


# ---------------------------------------------------------------------------
# special functions


def kummer_1f1(a, b, x):
    return special.hyp1f1(a, b, x)


def kummer_deficit(delta: float, x):
    """Return ``1 - 1F1(-delta; 1-delta; -x)`` for ``x >= 0``.

    The direct difference loses all precision for small ``x``; there the
    series ``delta * sum_k (-x)^k / ((k - delta) k!)`` is summed instead.
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("kummer_deficit needs x >= 0")
    out = np.empty_like(x)
    small = x < 0.5
    if np.any(small):
        xs = x[small]
        term = np.ones_like(xs)
        acc = np.zeros_like(xs)
        for k in range(1, 40):
            term = term * (-xs) / k
            acc = acc + term / (k - delta)
        out[small] = delta * acc
    big = ~small
    if np.any(big):
        out[big] = 1.0 - special.hyp1f1(-delta, 1.0 - delta, -x[big])
    return out if out.ndim else float(out)


def gauss_2f1(a, b, c, x):
    return special.hyp2f1(a, b, c, x)


def lower_incomplete_gamma(s, x):
    """Unregularized lower incomplete gamma function."""
    if np.any(np.asarray(s) <= 0):
        raise DomainError("lower incomplete gamma needs s > 0")
    if np.any(np.asarray(x) < 0):
        raise DomainError("lower incomplete gamma needs x >= 0")
    return special.gammainc(s, x) * special.gamma(s)


def eval_special(fn_id: str, params: Sequence[float]) -> float:
    """Evaluate one of the special functions used by the analysis.

    ``fn_id`` is one of ``kummer_1f1`` (a, b, x), ``gauss_2f1`` (a, b, c, x),
    ``lower_incomplete_gamma`` (s, x), ``erfc`` (x), ``erfc_inverse`` (y).
    Parameters outside the supported regimes raise :class:`DomainError`.
    """
    p = [float(v) for v in params]
    arity = {"kummer_1f1": 3, "gauss_2f1": 4, "lower_incomplete_gamma": 2,
             "erfc": 1, "erfc_inverse": 1}
    if fn_id not in arity:
        raise DomainError(f"unknown special function {fn_id!r}")
    if len(p) != arity[fn_id]:
        raise DomainError(f"{fn_id} takes {arity[fn_id]} parameters, got {len(p)}")
    if any(math.isnan(v) for v in p):
        raise DomainError("NaN parameter")

    if fn_id == "kummer_1f1":
        a, b, x = p
        if b <= 0 and float(b).is_integer():
            raise DomainError("1F1 undefined for non-positive integer b")
        if x > 0:
            raise DomainError("1F1 is only supported for x <= 0")
        return float(special.hyp1f1(a, b, x))
    if fn_id == "gauss_2f1":
        a, b, c, x = p
        if c <= 0 and float(c).is_integer():
            raise DomainError("2F1 undefined for non-positive integer c")
        if x > 0:
            raise DomainError("2F1 is only supported for x <= 0")
        return float(special.hyp2f1(a, b, c, x))
    if fn_id == "lower_incomplete_gamma":
        s, x = p
        if s <= 0:
            raise DomainError(f"lower incomplete gamma diverges for s={s} <= 0")
        if x < 0:
            raise DomainError("lower incomplete gamma needs x >= 0")
        if math.isinf(x):
            return float(special.gamma(s))
        return float(lower_incomplete_gamma(s, x))
    if fn_id == "erfc":
        return float(special.erfc(p[0]))
    y = p[0]
    if not 0 < y < 2:
        raise DomainError("erfc inverse needs 0 < y < 2")
    return float(special.erfcinv(y))


# ---------------------------------------------------------------------------
# semi-infinite quadrature


def _quad(g, a, b, spec, **kw):
    with np.errstate(all="ignore"):
        res = integrate.quad(g, a, b, epsabs=spec.abs_tol * 0.1, epsrel=spec.rel_tol * 0.1,
                             limit=200, full_output=1, **kw)
    return res[0], res[1]


def integrate_semi_infinite(f: Callable[[float], float], lower: float = 0.0,
                            spec: QuadratureSpec = DEFAULT_SPEC, *,
                            singular: bool = False, scale: float = 1.0) -> float:
    """Integrate ``f`` over ``[lower, inf)``.

    With ``singular=True`` the substitution ``z = lower + t**2`` removes an
    integrable ``(z - lower)**-1/2`` endpoint singularity.  ``scale`` is a
    hint for the width of the region carrying most of the mass.

    The range is covered by doubling panels ``[b, 2b]`` until the integrand
    has fallen below ``abs_tol * peak`` at three consecutive panel ends; the
    remainder is extrapolated assuming geometric decay of panel integrals.
    Raises :class:`AccuracyError` if that does not happen within
    ``spec.max_subdivisions`` panels.
    """
    if not scale > 0:
        raise ValidationError("scale must be positive")
    if singular:
        def g(t):
            return 2.0 * t * f(lower + t * t)
        b = math.sqrt(scale)
    else:
        def g(t):
            return f(lower + t)
        b = scale

    if spec.tail_cutoff_policy is TailPolicy.FIXED_UPPER_BOUND:
        upper = spec.upper_bound - lower
        if singular:
            upper = math.sqrt(max(upper, 0.0))
        val, err = _quad(g, 0.0, upper, spec)
        if err > max(spec.abs_tol, spec.rel_tol * abs(val)):
            raise AccuracyError("quadrature on fixed range did not converge", val, err)
        return float(val)

    total, err_total = _quad(g, 0.0, b, spec)
    # probe interior to learn the peak magnitude
    probe = np.linspace(0.0, b, 33)[1:]
    peak = max(abs(g(t)) for t in probe)
    pieces = []
    quiet = 0
    for _ in range(int(spec.max_subdivisions)):
        val, err = _quad(g, b, 2.0 * b, spec)
        total += val
        err_total += err
        pieces.append(val)
        b *= 2.0
        end = abs(g(b))
        mid = abs(g(0.75 * b))
        peak = max(peak, mid, end)
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if max(end, mid) <= spec.abs_tol * max(peak, 1e-300) and abs(val) <= tol:
            quiet += 1
        else:
            quiet = 0
        if quiet >= 3:
            tail = 0.0
            if len(pieces) >= 2 and pieces[-2] != 0.0:
                r = pieces[-1] / pieces[-2]
                if 0.0 < r < 1.0:
                    tail = pieces[-1] * r / (1.0 - r)
            total += tail
            err_total += abs(tail)
            if err_total > 10 * max(spec.abs_tol, spec.rel_tol * abs(total)):
                raise AccuracyError("semi-infinite quadrature error bound too large",
                                    float(total), float(err_total))
            return float(total)
    raise AccuracyError("integrand did not decay within max_subdivisions panels",
                        float(total), float(err_total + abs(pieces[-1]) if pieces else err_total))


# ---------------------------------------------------------------------------
# characteristic-function inversion


def _cf_scale(cf) -> float:
    """Frequency where |cf| first drops to 1/2; sets the inversion scale."""
    w = 1e-12
    if abs(cf(w)) <= 0.5:
        raise AccuracyError("cf already below 1/2 at the origin")
    while abs(cf(w)) > 0.5:
        w *= 2.0
        if w > 1e300:
            raise AccuracyError("cf does not decay")
    lo, hi = w / 2.0, w
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if abs(cf(mid)) > 0.5:
            lo = mid
        else:
            hi = mid
    return hi


def _cf_cutoff(cf, start, spec, max_doublings=60):
    """Smallest doubling of ``start`` beyond which |cf| stays below tol."""
    w = start
    quiet = 0
    for _ in range(max_doublings):
        w *= 2.0
        if abs(cf(w)) < spec.abs_tol and abs(cf(0.75 * w)) < spec.abs_tol:
            quiet += 1
            if quiet >= 3:
                return w
        else:
            quiet = 0
    raise AccuracyError("characteristic function decays too slowly for inversion", what=w)


def _oscillatory(g, a, b, x, kind, spec):
    """∫_a^b g(w)·kind(w x) dw with QUADPACK's Filon-type QAWO rule."""
    if x == 0.0:
        if kind == "sin":
            return 0.0, 0.0
        return _quad(g, a, b, spec)
    # panels of a few hundred periods keep QAWO's Chebyshev moments cheap
    period = 2 * math.pi / abs(x)
    n = max(1, int(math.ceil((b - a) / (400 * period))))
    edges = np.linspace(a, b, n + 1)
    tot = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _quad(g, lo, hi, spec, weight=kind, wvar=x)
        tot += v
        err += e
    return tot, err


def gil_pelaez_density(cf: Callable[[float], complex], x: float,
                       spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Density at ``x`` of a real random variable from its CF.

    f(x) = (1/pi) ∫_0^∞ [Re cf(w) cos(wx) + Im cf(w) sin(wx)] dw.
    """
    x = float(x)
    s = _cf_scale(cf)
    W = _cf_cutoff(cf, s, spec)
    cos_part, e1 = _oscillatory(lambda w: complex(cf(w)).real, 0.0, W, x, "cos", spec)
    sin_part, e2 = _oscillatory(lambda w: complex(cf(w)).imag, 0.0, W, x, "sin", spec)
    val = (cos_part + sin_part) / math.pi
    err = (e1 + e2) / math.pi
    if err > max(1e3 * spec.abs_tol, 1e3 * spec.rel_tol * abs(val)):
        raise AccuracyError("density inversion did not converge", val, err)
    return float(val)


def gil_pelaez_cdf(cf: Callable[[float], complex], x: float,
                   spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """CDF at ``x`` from the CF via the Gil-Pelaez sine form."""
    x = float(x)
    s = _cf_scale(cf)
    W = _cf_cutoff(cf, s, spec)
    c = min(s, W)

    def near(w):
        v = complex(cf(w))
        return (v.real * math.sin(w * x) - v.imag * math.cos(w * x)) / w

    head, e0 = _quad(near, 0.0, c, spec)
    p1, e1 = _oscillatory(lambda w: complex(cf(w)).real / w, c, W, x, "sin", spec)
    p2, e2 = _oscillatory(lambda w: complex(cf(w)).imag / w, c, W, x, "cos", spec)
    val = 0.5 + (head + p1 - p2) / math.pi
    err = (e0 + e1 + e2) / math.pi
    if err > max(1e3 * spec.abs_tol, 1e3 * spec.rel_tol * abs(val)):
        raise AccuracyError("cdf inversion did not converge", val, err)
    return float(min(1.0, max(0.0, val)))


# ---------------------------------------------------------------------------
# derivatives


def finite_difference_weights(order: int, offsets: Sequence[float]) -> np.ndarray:
    """Weights ``c`` with ``sum c_k f(x + o_k h) ≈ h**order f^(order)(x)``."""
    o = np.asarray(offsets, dtype=float)
    n = len(o)
    if order >= n:
        raise DomainError("need more stencil points than the derivative order")
    A = np.vander(o, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(A, rhs)


_MAX_ORDER = 8


def derivative(f: Callable[[float], float], x: float, order: int, h: float, *,
               levels: int = 8) -> float:
    """Richardson-extrapolated symmetric difference of ``f`` at ``x``.

    The stencil spans ``x +- ceil(order/2) * h`` at the coarsest level; each
    level halves ``h`` and a Neville tableau removes the even error terms.
    The entry with the smallest change from its neighbour is returned.
    """
    order = int(order)
    if order < 1:
        raise DomainError("derivative order must be >= 1")
    p = (order + 1) // 2
    offsets = np.arange(-p, p + 1, dtype=float)
    w = finite_difference_weights(order, offsets)
    tab = []
    best, best_err = None, math.inf
    for i in range(levels):
        vals = np.array([f(x + o * h) for o in offsets], dtype=float)
        row = [float(np.dot(w, vals)) / h ** order]
        fac = 4.0
        for j in range(1, i + 1):
            row.append(row[j - 1] + (row[j - 1] - tab[i - 1][j - 1]) / (fac - 1.0))
            fac *= 4.0
        if i:
            err = max(abs(row[i] - row[i - 1]), abs(row[i] - tab[i - 1][i - 1]))
            if err <= best_err:
                best, best_err = row[i], err
            # roundoff now dominates; later levels only get worse
            if i > 2 and abs(row[i] - tab[i - 1][i - 1]) > 2.0 * best_err:
                break
        tab.append(row)
        h /= 2.0
    return float(best)


def lt_derivative(lt: Callable[[float], float], order: int, z: float, *,
                  rel_step: float = 0.25, levels: int = 7) -> float:
    """d^order L / dz^order at ``z > 0`` by Richardson-extrapolated differences.

    The starting step is ``rel_step * z``, shrunk so the widest stencil point
    stays strictly positive.
    """
    order = int(order)
    if order < 0 or order > _MAX_ORDER:
        raise DomainError(f"derivative order must be in [0, {_MAX_ORDER}], got {order}")
    z = float(z)
    if order == 0:
        return float(lt(z))
    if not z > 0:
        raise DomainError("LT derivatives are taken at z > 0")
    span = (order + 1) // 2
    h = min(rel_step, 0.9 / span) * z
    return derivative(lt, z, order, h, levels=levels)


# ---------------------------------------------------------------------------
# distribution distance


def _eval_cdf(cdf, grid):
    try:
        v = np.asarray(cdf(grid), dtype=float)
        if v.shape == grid.shape:
            return v
    except Exception:
        pass
    return np.array([float(cdf(x)) for x in grid])


def ks_distance(cdf_a: Callable, cdf_b: Callable, grid: Sequence[float], *,
                monotone_tol: float = 1e-6, check_refinement: bool = False) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_a - F_b|`` over ``grid``.

    Raises :class:`ValidationError` if either CDF decreases by more than
    ``monotone_tol`` between grid points, or, with ``check_refinement``, if
    doubling the grid density moves the result by 1e-3 or more.
    """
    g = np.sort(np.asarray(grid, dtype=float).ravel())
    if g.size == 0:
        raise ValidationError("empty grid")
    a = _eval_cdf(cdf_a, g)
    b = _eval_cdf(cdf_b, g)
    for name, v in (("cdf_a", a), ("cdf_b", b)):
        if np.any(~np.isfinite(v)):
            raise ValidationError(f"{name} returned non-finite values")
        if v.size > 1 and np.min(np.diff(v)) < -monotone_tol:
            raise ValidationError(f"{name} is not nondecreasing on the grid")
    d = float(np.max(np.abs(a - b)))
    if check_refinement and g.size > 1:
        mids = 0.5 * (g[1:] + g[:-1])
        d2 = max(d, ks_distance(cdf_a, cdf_b, mids, monotone_tol=monotone_tol))
        if d2 - d >= 1e-3:
            raise ValidationError("grid too coarse: refinement changes KS distance by >= 1e-3")
        d = d2
    return d
