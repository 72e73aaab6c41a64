"""Kernel expressions and their evaluation.

A kernel is an immutable tree built from

* :class:`Matern` and :class:`RBF` leaves,
* :class:`Mixture` -- a weighted sum of leaves,
* :class:`Separable` -- ``A * K0(x, y)`` for ``m`` outputs,
* :class:`Nugget` -- adds ``tau2`` when the two locations coincide; only at the root.

Matérn kernels use the parameterization
``sigma2 * 2**(1-nu) / Gamma(nu) * (alpha d)**nu * K_nu(alpha d)`` and are
restricted to ``nu = k + 1/2`` with ``k = 0..4``, where the Bessel form
reduces to a polynomial in ``r = alpha d`` times ``exp(-r)``.

Free parameters are addressed by flat string paths::

    sigma2, alpha                      leaf at the root
    w[l], k[l].sigma2, k[l].alpha      mixture
    G[i,j]                             lower Cholesky factor of A (A = G G^T)
    tau2                               nugget
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, isfinite
from typing import NamedTuple, Optional, Union

import numpy as np

from . import _backend
from .errors import DimensionMismatch, InvalidKernel, UnknownParameter, UnsupportedNu

SUPPORTED_NU = (0.5, 1.5, 2.5, 3.5, 4.5)


class SimplexWarning(UserWarning):
    """Mixture weights do not sum to one."""


def _matern_polynomials(k):
    # nu = k + 1/2:  K(r)/sigma2 = exp(-r) * k!/(2k)! * sum_j (2k-j)!/((k-j)! j!) (2r)^j
    p = [
        Fraction(factorial(k) * factorial(2 * k - j) * 2**j, factorial(2 * k) * factorial(k - j) * factorial(j))
        for j in range(k + 1)
    ]
    # d/dr [P(r) e^{-r}] = (P'(r) - P(r)) e^{-r}
    q = [(j + 1) * p[j + 1] - p[j] for j in range(k)] + [-p[k]]
    return np.array([float(c) for c in p]), np.array([float(c) for c in q])


_POLY = {k + 0.5: _matern_polynomials(k) for k in range(5)}


def _positive(name, value):
    value = float(value)
    if not (isfinite(value) and value > 0):
        raise InvalidKernel(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Matern:
    sigma2: float
    alpha: float
    nu: float

    def __post_init__(self):
        object.__setattr__(self, "sigma2", _positive("sigma2", self.sigma2))
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        nu = float(self.nu)
        if nu not in _POLY:
            raise UnsupportedNu(f"nu must be one of {SUPPORTED_NU}, got {self.nu!r}")
        object.__setattr__(self, "nu", nu)

    @property
    def smoothness(self):
        """Number of mean-square derivatives, ceil(nu) - 1."""
        return int(self.nu + 0.5) - 1


@dataclass(frozen=True)
class RBF:
    """Squared exponential ``sigma2 * exp(-alpha * d**2)``."""

    sigma2: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "sigma2", _positive("sigma2", self.sigma2))
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))


Leaf = Union[Matern, RBF]


@dataclass(frozen=True)
class Mixture:
    weights: tuple
    components: tuple

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        components = tuple(self.components)
        if not components:
            raise InvalidKernel("mixture needs at least one component")
        if len(weights) != len(components):
            raise InvalidKernel("one weight per component required")
        for c in components:
            if not isinstance(c, (Matern, RBF)):
                raise InvalidKernel(f"mixture components must be Matern/RBF leaves, got {type(c).__name__}")
        if any(not isfinite(w) or w < 0 for w in weights):
            raise InvalidKernel(f"mixture weights must be finite and nonnegative: {weights}")
        if abs(sum(weights) - 1.0) > 1e-12:
            warnings.warn(f"mixture weights sum to {sum(weights)!r}, not 1", SimplexWarning, stacklevel=3)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)


@dataclass(frozen=True)
class Separable:
    """Multi-output kernel ``A * base(x, y)`` with ``A`` symmetric positive definite."""

    A: tuple
    base: Union[Matern, RBF, Mixture]

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise InvalidKernel(f"A must be a square matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidKernel("A has non-finite entries")
        if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise InvalidKernel("A must be symmetric")
        if np.min(np.linalg.eigvalsh(A)) <= 0:
            raise InvalidKernel("A must be positive definite")
        if not isinstance(self.base, (Matern, RBF, Mixture)):
            raise InvalidKernel(f"separable base must be a scalar kernel, got {type(self.base).__name__}")
        object.__setattr__(self, "A", tuple(tuple(row) for row in A.tolist()))

    @property
    def matrix(self):
        return np.array(self.A)

    @property
    def m(self):
        return len(self.A)


@dataclass(frozen=True)
class Nugget:
    tau2: float
    base: Union[Matern, RBF, Mixture, Separable]

    def __post_init__(self):
        tau2 = float(self.tau2)
        if not (isfinite(tau2) and tau2 >= 0):
            raise InvalidKernel(f"tau2 must be nonnegative, got {self.tau2!r}")
        if isinstance(self.base, Nugget):
            raise InvalidKernel("nugget may appear only once, at the root")
        if not isinstance(self.base, (Matern, RBF, Mixture, Separable)):
            raise InvalidKernel(f"unsupported nugget base {type(self.base).__name__}")
        object.__setattr__(self, "tau2", tau2)


KernelExpr = Union[Matern, RBF, Mixture, Separable, Nugget]


class Parts(NamedTuple):
    tau2: float
    A: Optional[np.ndarray]
    base: Union[Matern, RBF, Mixture]

    @property
    def m(self):
        return 1 if self.A is None else self.A.shape[0]


def structure(k: KernelExpr) -> Parts:
    """Split a kernel into (nugget variance, cross-output matrix or None, scalar base)."""
    tau2 = 0.0
    if isinstance(k, Nugget):
        tau2, k = k.tau2, k.base
    if isinstance(k, Separable):
        return Parts(tau2, k.matrix, k.base)
    if isinstance(k, (Matern, RBF, Mixture)):
        return Parts(tau2, None, k)
    raise InvalidKernel(f"not a kernel expression: {k!r}")


def leaves(k: KernelExpr):
    base = structure(k).base
    return list(base.components) if isinstance(base, Mixture) else [base]


def output_dim(k: KernelExpr) -> int:
    return structure(k).m


def prior_variance(k: KernelExpr):
    """K(x, x) without the nugget: a float, or an m x m matrix for separable kernels."""
    parts = structure(k)
    base = parts.base
    if isinstance(base, Mixture):
        s = sum(w * c.sigma2 for w, c in zip(base.weights, base.components))
    else:
        s = base.sigma2
    return s if parts.A is None else s * parts.A


# ---------------------------------------------------------------- parameters


def _lower_factor(A):
    return np.linalg.cholesky(np.asarray(A, dtype=float))


def parameters(k: KernelExpr) -> dict:
    """Ordered mapping of parameter path to its natural (constrained) value."""
    out = {}
    if isinstance(k, Nugget):
        out["tau2"] = k.tau2
        out.update(parameters(k.base))
    elif isinstance(k, Separable):
        G = _lower_factor(k.matrix)
        for i in range(k.m):
            for j in range(i + 1):
                out[f"G[{i},{j}]"] = float(G[i, j])
        out.update(parameters(k.base))
    elif isinstance(k, Mixture):
        for l, w in enumerate(k.weights):
            out[f"w[{l}]"] = w
        for l, c in enumerate(k.components):
            for name, v in parameters(c).items():
                out[f"k[{l}].{name}"] = v
    else:
        out["sigma2"] = k.sigma2
        out["alpha"] = k.alpha
    return out


def parameter_names(k: KernelExpr) -> list:
    return list(parameters(k))


_G_RE = re.compile(r"G\[(\d+),(\d+)\]$")


def with_parameters(k: KernelExpr, values) -> KernelExpr:
    """Return a copy of ``k`` with the given parameter paths replaced."""
    known = parameters(k)
    unknown = set(values) - set(known)
    if unknown:
        raise UnknownParameter(f"unknown parameter(s) {sorted(unknown)}")
    merged = {**known, **values}
    return _rebuild(k, merged)


def _rebuild(k, vals):
    if isinstance(k, Nugget):
        return Nugget(vals["tau2"], _rebuild(k.base, vals))
    if isinstance(k, Separable):
        G = np.zeros((k.m, k.m))
        for i in range(k.m):
            for j in range(i + 1):
                G[i, j] = vals[f"G[{i},{j}]"]
        A = G @ G.T
        return Separable(0.5 * (A + A.T), _rebuild(k.base, vals))
    if isinstance(k, Mixture):
        weights = [vals[f"w[{l}]"] for l in range(len(k.weights))]
        comps = []
        for l, c in enumerate(k.components):
            sub = {name: vals[f"k[{l}].{name}"] for name in ("sigma2", "alpha")}
            comps.append(_rebuild(c, sub))
        return Mixture(tuple(weights), tuple(comps))
    if isinstance(k, Matern):
        return Matern(vals["sigma2"], vals["alpha"], k.nu)
    return RBF(vals["sigma2"], vals["alpha"])


# ---------------------------------------------------------------- evaluation


def _as_points(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be an n x p matrix")
    return X


def _leaf_block(leaf, D, symmetric, grads):
    if isinstance(leaf, Matern):
        pcoef, qcoef = _POLY[leaf.nu]
        Ku, dKu = _backend.matern_unit(D, leaf.alpha, pcoef, qcoef, symmetric)
        K = leaf.sigma2 * Ku
        return K, ({"sigma2": Ku, "alpha": leaf.sigma2 * dKu} if grads else None)
    D2 = D * D
    E = np.exp(-leaf.alpha * D2)
    K = leaf.sigma2 * E
    return K, ({"sigma2": E, "alpha": -leaf.sigma2 * D2 * E} if grads else None)


def scalar_block(base, D, symmetric=True, grads=False):
    """Base-kernel block on a distance matrix, optionally with parameter derivatives.

    Returns ``(K, grads)`` where ``grads`` maps each base parameter path to
    ``dK/dparam`` (same shape as ``K``) or is ``None``.
    """
    if not isinstance(base, Mixture):
        return _leaf_block(base, D, symmetric, grads)
    K = np.zeros(D.shape)
    wgrads, cgrads = {}, {}
    for l, (w, c) in enumerate(zip(base.weights, base.components)):
        Kl, gl = _leaf_block(c, D, symmetric, grads)
        K += w * Kl
        if grads:
            wgrads[f"w[{l}]"] = Kl
            for name, dK in gl.items():
                cgrads[f"k[{l}].{name}"] = w * dK
    return K, ({**wgrads, **cgrads} if grads else None)


def eval_kernel(k: KernelExpr, x, y):
    """K(x, y) for two points; an m x m matrix for separable kernels."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatch(f"points have shapes {x.shape} and {y.shape}")
    parts = structure(k)
    D = _backend.distances(x[None, :], y[None, :])
    K, _ = scalar_block(parts.base, D, symmetric=False)
    value = K[0, 0]
    if parts.A is not None:
        value = value * parts.A
    if parts.tau2 and x.tobytes() == y.tobytes():
        value = value + (parts.tau2 if parts.A is None else parts.tau2 * np.eye(parts.m))
    return value


def expand(K0, A):
    """Location-major block matrix with block (i, j) = A * K0[i, j], i.e. kron(K0, A)."""
    return K0 if A is None else np.kron(K0, A)


def gram_matrix(k: KernelExpr, X, jitter=0.0):
    """Covariance of all outputs at the rows of ``X``, plus ``jitter`` on the diagonal.

    Separable kernels give an ``n*m`` square matrix ordered location-major:
    row ``i*m + a`` is output ``a`` at location ``i``. The nugget is added on
    the diagonal (index identity), never between distinct rows.
    """
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    X = _as_points(X)
    parts = structure(k)
    D = _backend.sym_distances(X)
    K0, _ = scalar_block(parts.base, D, symmetric=True)
    C = expand(K0, parts.A)
    extra = parts.tau2 + jitter
    if extra:
        C[np.diag_indices_from(C)] += extra
    return C


def cross_covariance(k: KernelExpr, X1, X2):
    """Latent covariance between two point sets (no nugget, no jitter)."""
    X1, X2 = _as_points(X1, "X1"), _as_points(X2, "X2")
    if X1.shape[1] != X2.shape[1]:
        raise DimensionMismatch(f"input dimensions {X1.shape[1]} and {X2.shape[1]} differ")
    parts = structure(k)
    K0, _ = scalar_block(parts.base, _backend.distances(X1, X2), symmetric=False)
    return expand(K0, parts.A)


def factor_derivative(G, i, j):
    """dA/dG[i,j] for A = G G^T."""
    E = np.zeros_like(G)
    E[i, j] = 1.0
    return E @ G.T + G @ E.T


def gram_gradient(k: KernelExpr, X, param: str):
    """Analytic derivative of :func:`gram_matrix` with respect to one parameter path."""
    X = _as_points(X)
    parts = structure(k)
    if param not in parameters(k):
        raise UnknownParameter(f"{param!r} is not a parameter of this kernel")
    N = X.shape[0] * parts.m
    if param == "tau2":
        return np.eye(N)
    D = _backend.sym_distances(X)
    K0, g0 = scalar_block(parts.base, D, symmetric=True, grads=True)
    match = _G_RE.match(param)
    if match:
        G = _lower_factor(parts.A)
        return np.kron(K0, factor_derivative(G, int(match.group(1)), int(match.group(2))))
    return expand(g0[param], parts.A)
