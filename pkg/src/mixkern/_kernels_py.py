"""Pure-numpy twin of the compiled ``_kernels`` extension."""
import numpy as np
from numpy.polynomial import polynomial as P


def distances(X1, X2):
    X1 = np.ascontiguousarray(X1, dtype=np.float64)
    X2 = np.ascontiguousarray(X2, dtype=np.float64)
    if X1.shape[1] != X2.shape[1]:
        raise ValueError("input dimensions differ")
    diff = X1[:, None, :] - X2[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def sym_distances(X):
    # |xi - xj| and |xj - xi| square to the same bits, so D is exactly symmetric
    D = distances(X, X)
    np.fill_diagonal(D, 0.0)
    return D


def matern_unit(D, alpha, pcoef, qcoef, symmetric):
    r = alpha * D
    e = np.exp(-r)
    K = P.polyval(r, pcoef) * e
    G = D * P.polyval(r, qcoef) * e
    return K, G


def matern_accumulate_lower(D, alpha, scale, pcoef, K):
    r = alpha * np.tril(D)
    K += np.tril(scale * P.polyval(r, pcoef) * np.exp(-r))


def matern_wdots(D, W, alpha, pcoef, qcoef, upper=False):
    Wl = np.triu(W, 1).T if upper else np.tril(W, -1)
    Wl = Wl + Wl.T + np.diag(np.diag(W))
    Ku, dKu = matern_unit(D, alpha, pcoef, qcoef, True)
    return float(np.vdot(Wl, Ku)), float(np.vdot(Wl, dKu))
