"""Dense small-matrix kernels: SVD, eigenvalue moduli, invertibility gauge.

The routines here are the accuracy floor for everything else in the
package, so their tolerances are contracts, not suggestions:

* ``svd``: reconstruction residual at most ``1e-12 * max(1, |m|)`` and
  orthogonality defect of the factors at most ``1e-12``;
* ``eigen_moduli``: moduli sorted descending, product equal to ``|det m|``
  within relative ``1e-8``.

All functions are pure and hold no state; they are safe under any worker
model.  Factorizations are delegated to LAPACK through numpy (bidiagonal
SVD; eigenvalues via balancing, Hessenberg reduction, and shifted QR),
which meets the contracts above for every dimension this package admits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_KERNEL_DIM",
    "LinalgError",
    "SvdResult",
    "svd",
    "spectral_norm",
    "eigen_moduli",
    "ell",
]

# Largest matrix dimension the kernels accept.  Compound (exterior-power)
# matrices of an 8-dimensional base reach C(8,4) = 70; nothing larger is
# ever built, which keeps every factorization dense and cheap.
MAX_KERNEL_DIM = 70


class LinalgError(RuntimeError):
    """A kernel precondition failed or an iteration did not converge."""


def as_square(m, *, max_dim: int = MAX_KERNEL_DIM) -> np.ndarray:
    """Validate and return ``m`` as a finite square float array."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    if not 1 <= d <= max_dim:
        raise LinalgError(f"dimension {d} outside supported range [1, {max_dim}]")
    if not np.all(np.isfinite(a)):
        raise LinalgError("matrix has non-finite entries")
    return a


@dataclass(frozen=True)
class SvdResult:
    """Factorization ``m = u @ diag(sigmas) @ v.T``.

    ``u`` and ``v`` have orthonormal columns (left and right singular
    vectors respectively); ``sigmas`` is non-negative and sorted
    descending.
    """

    u: np.ndarray
    sigmas: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigmas) @ self.v.T


def svd(m) -> SvdResult:
    """Full singular value decomposition of a small square matrix.

    Parameters
    ----------
    m : array_like
        Square matrix, dimension at most ``MAX_KERNEL_DIM``.

    Returns
    -------
    SvdResult

    Raises
    ------
    LinalgError
        If the input is malformed or the iteration fails; the message
        carries a cheap conditioning diagnostic for the failing matrix.
    """
    a = as_square(m)
    try:
        u, s, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:
        fro = float(np.linalg.norm(a))
        det = float(np.linalg.det(a))
        raise LinalgError(
            f"SVD did not converge (frobenius {fro:.6e}, det {det:.6e})"
        ) from exc
    return SvdResult(u=u, sigmas=s, v=vt.T)


def spectral_norm(m) -> float:
    """Largest singular value of ``m``."""
    return float(svd(m).sigmas[0])


def eigen_moduli(m) -> np.ndarray:
    """Eigenvalue moduli of ``m``, sorted descending.

    Only the moduli are exposed: phases of complex pairs are irrelevant
    to every growth-rate statistic built on top of this kernel.  Ties are
    kept in encounter order (stable sort).
    """
    a = as_square(m)
    try:
        w = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        fro = float(np.linalg.norm(a))
        raise LinalgError(
            f"eigenvalue iteration did not converge (frobenius {fro:.6e}); "
            "a retry under an orthogonal similarity may succeed"
        ) from exc
    moduli = np.abs(w)
    order = np.argsort(-moduli, kind="stable")
    return moduli[order]


def ell(m) -> float:
    """Invertibility gauge ``max(log+ |m|, log+ |m^-1|)``.

    ``log+`` is the positive part of the logarithm and the norms are
    spectral.  Finite exactly when ``m`` is invertible.
    """
    s = svd(m).sigmas
    if s[-1] <= 0.0:
        raise LinalgError("matrix is not invertible")
    log_norm = max(float(np.log(s[0])), 0.0)
    log_inv_norm = max(float(-np.log(s[-1])), 0.0)
    return max(log_norm, log_inv_norm)
