"""Exact zero-mean GP inference.

The observation covariance is ``C = Gram(kernel) + jitter * I``. The jitter
is a fixed model constant; a nugget inside the kernel is a separate,
optimizable parameter.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import log, pi

import numpy as np
from scipy.linalg import blas, solve_triangular

from . import _backend
from .errors import DimensionMismatch, NotPositiveDefinite, UnknownParameter
from .kernels import (
    _POLY,
    KernelExpr,
    Matern,
    Mixture,
    Nugget,
    leaves,
    _as_points,
    expand,
    gram_matrix,
    cross_covariance,
    parameter_names,
    prior_variance,
    scalar_block,
    structure,
)
from .linalg import factor_inverse, factor_solve, factor_with_retry, log_det, sample_mvn, spd_factor
from .rng import RngStream

_LOG_2PI = log(2.0 * pi)


@dataclass(frozen=True)
class GpModel:
    """A kernel plus the fixed diagonal jitter.

    ``kron=True`` evaluates separable kernels through the eigenvectors of
    ``A``, which splits the ``nm x nm`` covariance into ``m`` independent
    ``n x n`` systems. It is exact, and only used when requested.
    """

    kernel: KernelExpr
    jitter: float = 0.0
    kron: bool = False

    def __post_init__(self):
        if not self.jitter >= 0:
            raise ValueError("jitter must be nonnegative")

    def replace(self, kernel):
        return GpModel(kernel, self.jitter, self.kron)


@dataclass(frozen=True)
class Posterior:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def var(self):
        return np.diag(self.cov)

    def per_output(self, m):
        """Mean as an (n*, m) array: one column per output."""
        return self.mean.reshape(-1, m)


def strip_nugget(k):
    return k.base if isinstance(k, Nugget) else k


def _flat_targets(y, n, m):
    y = np.asarray(y, dtype=float)
    if y.ndim == 2 and y.shape == (n, m):
        y = y.reshape(-1)
    y = y.reshape(-1)
    if y.shape[0] != n * m:
        raise DimensionMismatch(f"expected {n * m} targets for n={n}, m={m}; got {y.shape[0]}")
    return y


class Objective:
    """Log marginal likelihood and gradient on fixed data, reused across kernels.

    Distances between training inputs are computed once; each call assembles
    the covariance for the supplied kernel. Gradients are with respect to the
    natural parameters in :func:`~mixkern.kernels.parameter_names` order.
    """

    def __init__(self, X, y, jitter=0.0, kron=False, m=1):
        self.X = _as_points(X)
        self.n = self.X.shape[0]
        self.m = m
        self.y = _flat_targets(y, self.n, m)
        self.jitter = float(jitter)
        self.kron = kron
        self.D = _backend.sym_distances(self.X)

    def __call__(self, kernel, grad=True):
        parts = structure(kernel)
        if parts.m != self.m:
            raise DimensionMismatch(f"kernel has {parts.m} outputs, data has {self.m}")
        matern = all(isinstance(c, Matern) for c in leaves(kernel))
        if parts.A is None and matern:
            return self._dense_matern(kernel, parts, grad)
        if parts.A is not None and self.kron:
            rotated = self._rotated_matern if matern else self._rotated
            try:
                return rotated(kernel, parts, grad, 0.0)
            except NotPositiveDefinite:
                scale = prior_variance(strip_nugget(kernel))
                bump = 9.0 * self.jitter if self.jitter > 0 else 1e-10 * float(np.trace(scale)) / self.m
                return rotated(kernel, parts, grad, bump)
        K0, g0 = scalar_block(parts.base, self.D, symmetric=True, grads=grad)
        return self._dense(kernel, parts, K0, g0, grad)

    def _dense(self, kernel, parts, K0, g0, grad):
        y = self.y
        N = y.shape[0]
        C = expand(K0, parts.A)
        if parts.A is None:
            C = C.copy()
        C[np.diag_indices_from(C)] += parts.tau2 + self.jitter
        F, _ = factor_with_retry(C, self.jitter)
        a = factor_solve(F, y)
        lml = -0.5 * float(y @ a) - 0.5 * log_det(F) - 0.5 * N * _LOG_2PI
        if not grad:
            return lml, None
        W = np.outer(a, a) - factor_inverse(F)
        out = {}
        if isinstance(kernel, Nugget):
            out["tau2"] = 0.5 * float(np.trace(W))
        if parts.A is None:
            Wb = W
        else:
            n, m = self.n, self.m
            W4 = W.reshape(n, m, n, m)
            Wb = np.einsum("iajb,ab->ij", W4, parts.A)
            gradA = 0.5 * np.einsum("iajb,ij->ab", W4, K0)
            out.update(self._factor_grads(parts.A, gradA))
        for name, dK in g0.items():
            out[name] = 0.5 * float(np.vdot(Wb, dK))
        return lml, self._ordered(kernel, out)

    # Matérn fast paths: matrices are built and used through their lower
    # triangle only, and W is contracted against each leaf block on the fly
    # instead of forming derivative matrices.

    def _matern_lower(self, base):
        mix = isinstance(base, Mixture)
        terms = list(zip(base.weights, base.components)) if mix else [(1.0, base)]
        K = np.zeros((self.n, self.n))
        for w, c in terms:
            _backend.matern_accumulate_lower(self.D, c.alpha, w * c.sigma2, _POLY[c.nu][0], K)
        return K, terms, mix

    def _matern_contract(self, W, terms, mix, out):
        """0.5 * <W, dK/dtheta> for every base parameter, W read from its lower triangle."""
        for l, (w, c) in enumerate(terms):
            sk, sg = _backend.matern_wdots(self.D, W, c.alpha, *_POLY[c.nu])
            if mix:
                out[f"w[{l}]"] = 0.5 * c.sigma2 * sk
                out[f"k[{l}].sigma2"] = 0.5 * w * sk
                out[f"k[{l}].alpha"] = 0.5 * w * c.sigma2 * sg
            else:
                out["sigma2"] = 0.5 * sk
                out["alpha"] = 0.5 * c.sigma2 * sg
        return out

    def _dense_matern(self, kernel, parts, grad):
        n, y = self.n, self.y
        C, terms, mix = self._matern_lower(parts.base)
        C[np.diag_indices(n)] += parts.tau2 + self.jitter
        F, _ = factor_with_retry(C, self.jitter)
        a = factor_solve(F, y)
        lml = -0.5 * float(y @ a) - 0.5 * log_det(F) - 0.5 * n * _LOG_2PI
        if not grad:
            return lml, None
        W = np.outer(a, a)
        W -= factor_inverse(F, full=False)
        out = {}
        if isinstance(kernel, Nugget):
            out["tau2"] = 0.5 * float(np.trace(W))
        return lml, self._ordered(kernel, self._matern_contract(W, terms, mix, out))

    def _rotated_matern(self, kernel, parts, grad, bump):
        n, m = self.n, self.m
        K0, terms, mix = self._matern_lower(parts.base)
        s, V = np.linalg.eigh(parts.A)
        Z = self.y.reshape(n, m) @ V
        noise = parts.tau2 + self.jitter + bump
        lml = -0.5 * n * m * _LOG_2PI
        betas, traces, inv_traces = [], [], []
        Wb = np.zeros((n, n)) if grad else None
        for c in range(m):
            M = s[c] * K0
            M[np.diag_indices(n)] += noise
            F = spd_factor(M)
            beta = factor_solve(F, Z[:, c])
            lml += -0.5 * float(Z[:, c] @ beta) - 0.5 * log_det(F)
            betas.append(beta)
            if grad:
                Minv = factor_inverse(F, full=False)
                # <Minv, K0> through the leaf contractions
                traces.append(sum(w * leaf.sigma2 * _backend.matern_wdots(self.D, Minv, leaf.alpha, *_POLY[leaf.nu])[0] for w, leaf in terms))
                inv_traces.append(float(np.trace(Minv)))
                Wb += s[c] * np.outer(beta, beta)
                Wb -= s[c] * Minv
        if not grad:
            return lml, None
        out = {}
        if isinstance(kernel, Nugget):
            out["tau2"] = 0.5 * sum(float(b @ b) - t for b, t in zip(betas, inv_traces))
        K0b = [blas.dsymv(1.0, K0, b, lower=1) for b in betas]
        H = np.array([[float(betas[c] @ K0b[d]) for d in range(m)] for c in range(m)])
        H[np.diag_indices(m)] -= traces
        out.update(self._factor_grads(parts.A, 0.5 * V @ H @ V.T))
        return lml, self._ordered(kernel, self._matern_contract(Wb, terms, mix, out))

    def _rotated(self, kernel, parts, grad, bump):
        K0, g0 = scalar_block(parts.base, self.D, symmetric=True, grads=grad)
        n, m = self.n, self.m
        s, V = np.linalg.eigh(parts.A)
        Z = self.y.reshape(n, m) @ V
        noise = parts.tau2 + self.jitter + bump
        lml = -0.5 * n * m * _LOG_2PI
        betas, invs = [], []
        for c in range(m):
            M = s[c] * K0
            M[np.diag_indices_from(M)] += noise
            F = spd_factor(M)
            beta = factor_solve(F, Z[:, c])
            lml += -0.5 * float(Z[:, c] @ beta) - 0.5 * log_det(F)
            betas.append(beta)
            if grad:
                invs.append(factor_inverse(F))
        if not grad:
            return lml, None
        out = {}
        if isinstance(kernel, Nugget):
            out["tau2"] = 0.5 * sum(float(b @ b) - float(np.trace(Mi)) for b, Mi in zip(betas, invs))
        Wb = np.zeros((n, n))
        H = np.empty((m, m))
        K0b = [K0 @ b for b in betas]
        for c in range(m):
            Wb += s[c] * (np.outer(betas[c], betas[c]) - invs[c])
            for d in range(m):
                H[c, d] = float(betas[c] @ K0b[d])
            H[c, c] -= float(np.vdot(invs[c], K0))
        gradA = 0.5 * V @ H @ V.T
        out.update(self._factor_grads(parts.A, gradA))
        for name, dK in g0.items():
            out[name] = 0.5 * float(np.vdot(Wb, dK))
        return lml, self._ordered(kernel, out)

    @staticmethod
    def _factor_grads(A, gradA):
        G = np.linalg.cholesky(A)
        dG = (gradA + gradA.T) @ G
        return {f"G[{i},{j}]": float(dG[i, j]) for i in range(A.shape[0]) for j in range(i + 1)}

    @staticmethod
    def _ordered(kernel, out):
        return np.array([out[name] for name in parameter_names(kernel)])


def _objective(model, X, y):
    m = structure(model.kernel).m
    return Objective(X, y, model.jitter, model.kron, m)


def log_marginal_likelihood(model: GpModel, X, y) -> float:
    """log N(y | 0, Gram + jitter I)."""
    return _objective(model, X, y)(model.kernel, grad=False)[0]


def lml_gradient(model: GpModel, X, y, params=None):
    """Gradient of the log marginal likelihood in natural parameter space.

    ``params`` selects and orders parameter paths; default is all of them.
    """
    names = parameter_names(model.kernel)
    _, g = _objective(model, X, y)(model.kernel, grad=True)
    if params is None:
        return g
    index = {name: i for i, name in enumerate(names)}
    missing = [p for p in params if p not in index]
    if missing:
        raise UnknownParameter(f"unknown parameter(s) {missing}")
    return np.array([g[index[p]] for p in params])


def posterior_predict(model: GpModel, Xtrain, y, Xtest) -> Posterior:
    """Latent posterior at ``Xtest`` (nugget and jitter excluded from test covariances)."""
    Xtrain, Xtest = _as_points(Xtrain, "Xtrain"), _as_points(Xtest, "Xtest")
    if Xtrain.shape[1] != Xtest.shape[1]:
        raise DimensionMismatch("train and test inputs have different dimensions")
    k = model.kernel
    m = structure(k).m
    y = _flat_targets(y, Xtrain.shape[0], m)
    C = gram_matrix(k, Xtrain, model.jitter)
    F, _ = factor_with_retry(C, model.jitter)
    Ks = cross_covariance(k, Xtrain, Xtest)
    mean = Ks.T @ factor_solve(F, y)
    V = solve_triangular(F.L, Ks, lower=True, check_finite=False)
    cov = gram_matrix(strip_nugget(k), Xtest) - V.T @ V
    cov = 0.5 * (cov + cov.T)
    scale = float(np.max(np.diag(np.atleast_2d(prior_variance(k)))))
    diag = np.diag(cov).copy()
    tiny = (diag < 0) & (diag >= -1e-8 * scale)
    if np.any(tiny):
        diag[tiny] = 0.0
        cov[np.diag_indices_from(cov)] = diag
    return Posterior(mean, cov)


def sample_prior(model: GpModel, X, T, seed, path=()):
    """T independent draws of y ~ N(0, Gram + jitter I); draw t uses stream ``path + (t,)``."""
    if T < 1:
        raise ValueError("T must be at least 1")
    C = gram_matrix(model.kernel, X, model.jitter)
    F, _ = factor_with_retry(C, model.jitter)
    N = C.shape[0]
    Z = np.empty((N, T))
    for t in range(T):
        Z[:, t] = RngStream(seed, tuple(path) + (t,)).normal(N)
    return sample_mvn(F, Z).T


def mse(predicted, truth) -> float:
    predicted = np.asarray(predicted, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if predicted.shape != truth.shape:
        raise DimensionMismatch(f"lengths {predicted.shape[0]} and {truth.shape[0]} differ")
    return float(np.mean((predicted - truth) ** 2))
