"""Spectral densities, microergodic parameters, and tail diagnostics.

Densities use the unnormalized Matérn form

    rho(w) = sigma2 * alpha**(2 nu) / (alpha**2 + |w|**2) ** (nu + p/2)

summed with the mixture weights. The dimension-dependent Fourier constant
is deliberately omitted: every diagnostic here looks at ratios or at
whether an integral converges, and neither depends on that constant.

Integrals over ``R^p`` of isotropic functions are reduced to radial form
``S_{p-1} * int f(w) w**(p-1) dw`` and evaluated by adaptive Gauss-Legendre
panels on a geometric grid. Convergence cannot be computed directly, so it
is judged from a sweep of upper cutoffs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MixedCase, QuadratureFailure, UnsupportedKernel
from .kernels import RBF, Matern, Mixture, Nugget, Separable, structure

EQUIVALENT = "Equivalent"
ORTHOGONAL = "Orthogonal"
NOT_EQUIVALENT = "NotEquivalent"
INCONCLUSIVE = "Inconclusive"
CONVERGENT = "Convergent"
DIVERGENT = "Divergent"

DEFAULT_CUTOFFS = (1e1, 1e2, 1e3, 1e4)


@dataclass(frozen=True)
class SpectralQuery:
    kernel: object
    p: int
    omega: float

    def __post_init__(self):
        if int(self.p) < 1:
            raise ValueError("p must be a positive integer")
        if not self.omega >= 0:
            raise ValueError("omega must be nonnegative")
        _terms(self.kernel)


@dataclass(frozen=True)
class MicroergodicReport:
    kind: str
    primary_value: object
    secondary_value: Optional[float] = None
    secondary_applies: bool = False


@dataclass(frozen=True)
class SpectralVerdict:
    classification: str
    tail_slope: float
    cutoff_values: tuple
    cutoffs: tuple = ()

    def csv_row(self):
        last = list(self.cutoff_values[-3:])
        last = [math.nan] * (3 - len(last)) + last
        return [self.classification, self.tail_slope, *last]


def _terms(kernel):
    """(weight, sigma2, alpha, nu) for each Matérn leaf of a scalar kernel."""
    if isinstance(kernel, (Nugget, Separable)):
        raise UnsupportedKernel("spectral densities need a scalar kernel without nugget")
    leaves = kernel.components if isinstance(kernel, Mixture) else (kernel,)
    weights = kernel.weights if isinstance(kernel, Mixture) else (1.0,)
    out = []
    for w, leaf in zip(weights, leaves):
        if not isinstance(leaf, Matern):
            raise UnsupportedKernel(f"only Matérn leaves have a polynomial-tail density, got {type(leaf).__name__}")
        out.append((w, leaf.sigma2, leaf.alpha, leaf.nu))
    return out


def density(kernel, p, omega):
    """Vectorized spectral density at radial frequencies ``omega``."""
    omega = np.asarray(omega, dtype=float)
    w2 = omega * omega
    out = np.zeros_like(omega)
    for w, s2, a, nu in _terms(kernel):
        out = out + w * s2 * a ** (2 * nu) / (a * a + w2) ** (nu + p / 2)
    return out


def spectral_density(q: SpectralQuery) -> float:
    return float(density(q.kernel, q.p, q.omega))


def _scaled_parts(terms, p, omega, nu0):
    """Split ``rho(w) * w**(2 nu0 + p)`` into its limit and a vanishing remainder.

    Keeping the two apart avoids cancellation when two densities share the
    same limit and only the remainders differ.
    """
    omega = np.asarray(omega, dtype=float)
    const = 0.0
    rest = np.zeros_like(omega)
    for w, s2, a, nu in terms:
        c = w * s2 * a ** (2 * nu)
        decay = np.expm1(-(nu + p / 2) * np.log1p((a / omega) ** 2))
        if nu == nu0:
            const += c
            rest = rest + c * decay
        else:
            rest = rest + c * (1.0 + decay) * omega ** (-2 * (nu - nu0))
    return const, rest


def _scaled_density(terms, p, omega, nu0):
    const, rest = _scaled_parts(terms, p, omega, nu0)
    return const + rest


def tail_constant(kernel, p, omega):
    """``rho(w) * w**(2 nu_1 + p)`` for the least smooth ``nu_1``; tends to its microergodic value."""
    terms = _terms(kernel)
    nu0 = min(t[3] for t in terms)
    return _scaled_density(terms, p, omega, nu0)


# ------------------------------------------------------------ microergodic


def microergodic(kernel, p=1) -> MicroergodicReport:
    """Identifiable parameter combination of a Matérn mixture or separable kernel.

    * distinct smoothness (sorted by nu): ``w1 s1 a1^(2 nu1)``, secondary
      ``w2 s2 a2^(2 nu2) - nu1 w1 s1 a1^(2 (nu1 + 1))``;
    * equal smoothness: ``sum w s a^(2 nu)``, secondary ``sum w s a^(2 nu + 2)``;
    * separable ``A * Matern``: the matrix ``s a^(2 nu) A``.

    The secondary value is always reported; ``secondary_applies`` marks the
    input dimensions (p >= 5) where it is a second identifiable quantity.
    A nugget at the root is ignored (it is identifiable on its own).
    """
    if isinstance(kernel, Nugget):
        kernel = kernel.base
    if isinstance(kernel, Separable):
        base = kernel.base
        if not isinstance(base, Matern):
            raise UnsupportedKernel("separable microergodic value needs a single Matérn base")
        value = base.sigma2 * base.alpha ** (2 * base.nu) * kernel.matrix
        return MicroergodicReport("separable", value)
    terms = _terms(kernel)
    applies = p >= 5
    nus = [t[3] for t in terms]
    if len(terms) == 1:
        w, s2, a, nu = terms[0]
        return MicroergodicReport("distinct-nu", w * s2 * a ** (2 * nu))
    if len(set(nus)) == 1:
        nu = nus[0]
        primary = sum(w * s2 * a ** (2 * nu) for w, s2, a, _ in terms)
        secondary = sum(w * s2 * a ** (2 * nu + 2) for w, s2, a, _ in terms)
        return MicroergodicReport("same-nu", primary, secondary, applies)
    if len(set(nus)) == len(nus):
        (w1, s1, a1, nu1), (w2, s2, a2, nu2) = sorted(terms, key=lambda t: t[3])[:2]
        primary = w1 * s1 * a1 ** (2 * nu1)
        secondary = w2 * s2 * a2 ** (2 * nu2) - nu1 * w1 * s1 * a1 ** (2 * (nu1 + 1))
        return MicroergodicReport("distinct-nu", primary, secondary, applies)
    raise MixedCase(f"smoothness values {sorted(nus)} are neither all distinct nor all equal")


def smoothness_order(kernel):
    """Mean-square differentiability order: min over leaves of ceil(nu) - 1 (RBF counts as inf)."""
    if isinstance(kernel, Nugget):
        raise UnsupportedKernel("a nugget process is not mean-square continuous")
    base = structure(kernel).base
    leaves = base.components if isinstance(base, Mixture) else (base,)
    orders = [math.inf if isinstance(leaf, RBF) else leaf.smoothness for leaf in leaves]
    return min(orders)


# ------------------------------------------------------------ quadrature

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _panel(f, a, b):
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _GL_NODES
    return half * float(np.dot(_GL_WEIGHTS, f(x)))


MAX_PANELS = 20000  # subdivision budget per radial_integral call


def _adaptive(f, a, b, whole, rtol, depth, budget):
    budget[0] -= 2
    if budget[0] < 0:
        raise QuadratureFailure("subdivision budget exhausted")
    mid = math.sqrt(a * b)
    left, right = _panel(f, a, mid), _panel(f, mid, b)
    both = left + right
    if abs(both - whole) <= rtol * abs(both) or abs(both - whole) < 1e-300:
        return both
    if depth == 0:
        # rounding noise in the integrand caps the attainable accuracy
        if abs(both - whole) <= 1e-6 * abs(both):
            return both
        raise QuadratureFailure(f"no convergence on panel [{a:g}, {b:g}]")
    return _adaptive(f, a, mid, left, rtol, depth - 1, budget) + _adaptive(f, mid, b, right, rtol, depth - 1, budget)


def sphere_area(p):
    """Surface measure of the unit sphere in R^p (2 for p = 1)."""
    return 2.0 * math.pi ** (p / 2) / math.gamma(p / 2)


def radial_integral(f, a, b, p, rtol=1e-10, panels_per_decade=4):
    """``int_{a < |w| <= b} f(|w|) dw`` in R^p for a radial function ``f`` (0 < a < b)."""
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    n_panels = max(1, math.ceil(math.log10(b / a) * panels_per_decade))
    edges = np.geomspace(a, b, n_panels + 1)

    def shell(w):
        return f(w) * w ** (p - 1)

    total, budget = 0.0, [MAX_PANELS]
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _adaptive(shell, lo, hi, _panel(shell, lo, hi), rtol, 20, budget)
    total *= sphere_area(p)
    if not math.isfinite(total):
        raise QuadratureFailure("integral is not finite")
    return total


def _partial_integrals(f, lower, cutoffs, p):
    values, start, acc = [], lower, 0.0
    for c in cutoffs:
        acc += radial_integral(f, start, c, p)
        values.append(acc)
        start = c
    return tuple(values)


def _log_slope(f, lo, hi, n=33):
    w = np.geomspace(lo, hi, n)
    g = f(w)
    pos = g > 0
    if not np.any(pos):
        return -math.inf
    if np.count_nonzero(pos) < 2:
        return math.nan
    return float(np.polyfit(np.log(w[pos]), np.log(g[pos]), 1)[0])


def _check_cutoffs(cutoffs, lower):
    cutoffs = tuple(float(c) for c in cutoffs)
    if len(cutoffs) < 4:
        raise ValueError("need at least 4 cutoffs")
    if cutoffs[0] <= lower or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be increasing and above the lower limit")
    return cutoffs


def _increments_shrink(values, ratio=0.5):
    inc = np.diff((0.0,) + tuple(values))
    if np.all(inc == 0):
        return True
    last = inc[-3:]
    if np.any(last[:-1] <= 0):
        return False
    return bool(np.all(last[1:] / last[:-1] <= ratio))


def moment_integral_diagnostic(kernel, p, d, cutoffs=DEFAULT_CUTOFFS, lower=1.0) -> SpectralVerdict:
    """Does ``int |w|^(2d) rho(w) dw`` converge (d-times mean-square differentiable)?

    Partial integrals over ``lower < |w| <= cutoff`` are computed for each
    cutoff. Divergent when the log-log slope of the partial integral against
    the cutoff is at least 0.1 over the last interval; Convergent when that
    slope is below 0.1 and the increments shrink geometrically.
    """
    cutoffs = _check_cutoffs(cutoffs, lower)
    _terms(kernel)

    def f(w):
        return w ** (2 * d) * density(kernel, p, w)

    values = _partial_integrals(f, lower, cutoffs, p)
    slope = _log_slope(lambda w: f(w) * w ** (p - 1), cutoffs[-2], cutoffs[-1])
    growth = math.log(values[-1] / values[-2]) / math.log(cutoffs[-1] / cutoffs[-2])
    if growth >= 0.1:
        label = DIVERGENT
    elif _increments_shrink(values):
        label = CONVERGENT
    else:
        label = INCONCLUSIVE
    return SpectralVerdict(label, slope, values, cutoffs)


def _nugget(k):
    return k.tau2 if isinstance(k, Nugget) else 0.0


def equivalence_diagnostic(k1, k2, p=1, delta=1.0, cutoffs=DEFAULT_CUTOFFS) -> SpectralVerdict:
    """Numerical integral test for equivalence of two Matérn-mixture GPs.

    Rules, in order: different nuggets -> Orthogonal; otherwise the squared
    relative density difference, integrated over ``delta < |w| <= cutoff``,
    decides. Its shell-weighted tail slope at most -1.5 with geometrically
    shrinking increments -> Equivalent; slope within 0.1 of ``p - 1`` (the
    relative difference tends to a nonzero constant) -> NotEquivalent;
    anything else, and every query with ``p >= 4``, -> Inconclusive.
    """
    if abs(_nugget(k1) - _nugget(k2)) > 1e-12:
        return SpectralVerdict(ORTHOGONAL, math.nan, ())
    k1 = k1.base if isinstance(k1, Nugget) else k1
    k2 = k2.base if isinstance(k2, Nugget) else k2
    t1, t2 = _terms(k1), _terms(k2)
    cutoffs = _check_cutoffs(cutoffs, delta)
    nu0 = min(t[3] for t in t1 + t2)

    def rel2(w):
        c1, rest1 = _scaled_parts(t1, p, w, nu0)
        c2, rest2 = _scaled_parts(t2, p, w, nu0)
        return (((c2 - c1) + (rest2 - rest1)) / (c1 + rest1)) ** 2

    values = _partial_integrals(rel2, delta, cutoffs, p)
    slope = _log_slope(lambda w: rel2(w) * w ** (p - 1), cutoffs[-2], cutoffs[-1])
    if p >= 4:
        label = INCONCLUSIVE
    elif slope <= -1.5 and _increments_shrink(values):
        label = EQUIVALENT
    elif abs(slope - (p - 1)) <= 0.1:
        label = NOT_EQUIVALENT
    else:
        label = INCONCLUSIVE
    return SpectralVerdict(label, slope, values, cutoffs)
