"""Select the compiled kernel core when it was built, else the numpy twin."""
import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_impls = {"python": _kernels_py}
if _compiled is not None:
    _impls["cython"] = _compiled

name = "cython" if _compiled is not None else "python"
impl = _impls[name]


def available():
    return sorted(_impls)


def use(backend):
    """Switch the active backend ('cython' or 'python'); returns the previous name."""
    global name, impl
    if backend not in _impls:
        raise ValueError(f"backend {backend!r} not available; have {available()}")
    previous = name
    name, impl = backend, _impls[backend]
    return previous


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def distances(X1, X2):
    return impl.distances(_c(X1), _c(X2))


def sym_distances(X):
    return impl.sym_distances(_c(X))


def matern_unit(D, alpha, pcoef, qcoef, symmetric=False):
    return impl.matern_unit(_c(D), float(alpha), _c(pcoef), _c(qcoef), bool(symmetric))


def matern_accumulate_lower(D, alpha, scale, pcoef, K):
    """Add ``scale`` times the unit Matérn block to the lower triangle of ``K`` in place."""
    if not (K.flags.c_contiguous and K.dtype == np.float64):
        raise ValueError("K must be a C-contiguous float64 array")
    impl.matern_accumulate_lower(_c(D), float(alpha), float(scale), _c(pcoef), K)


def matern_wdots(D, W, alpha, pcoef, qcoef):
    """``(<W, Ku>, <W, dKu/dalpha>)`` for symmetric ``W`` whose lower triangle is valid.

    A Fortran-ordered ``W`` (as LAPACK returns) is read through its
    transpose rather than copied.
    """
    if W.flags.f_contiguous and not W.flags.c_contiguous:
        return impl.matern_wdots(_c(D), W.T, float(alpha), _c(pcoef), _c(qcoef), True)
    return impl.matern_wdots(_c(D), _c(W), float(alpha), _c(pcoef), _c(qcoef), False)
