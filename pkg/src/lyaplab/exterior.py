"""Compound matrices: the p-th exterior power as a matrix of p-by-p minors.

For a d-by-d matrix ``m`` the p-th compound is the C(d,p)-by-C(d,p)
matrix whose (I, J) entry is the minor of ``m`` on rows I and columns J,
with the p-subsets of {1, ..., d} enumerated in dictionary order.  The
compound of a product is the product of the compounds, its spectral norm
is the product of the top p singular values of ``m``, and its top
eigenvalue modulus is the product of the top p eigenvalue moduli; those
three identities are what the rest of the package leans on.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .linalg import as_square

__all__ = ["EXTERIOR_DIM_CAP", "ExteriorMatrix", "subset_enumeration", "exterior_power"]

# Hard cap on the compound dimension C(d, p).  C(8, 4) = 70 is the
# largest value reachable from the admissible base dimensions.
EXTERIOR_DIM_CAP = 70


def subset_enumeration(d: int, p: int) -> list[tuple[int, ...]]:
    """Strictly increasing p-subsets of {1, ..., d} in dictionary order.

    The row/column order of every compound matrix built by this module.
    """
    if d < 1:
        raise ValueError(f"base dimension must be positive, got {d}")
    if not 1 <= p <= d:
        raise ValueError(f"subset size must lie in [1, {d}], got {p}")
    return list(combinations(range(1, d + 1), p))


def _det_stack(blocks: np.ndarray) -> np.ndarray:
    """Determinants of a stack of p-by-p matrices.

    Direct expansion up to p = 4 (exact formula, no pivoting noise);
    LU with partial pivoting beyond.
    """
    p = blocks.shape[-1]
    if p == 1:
        return blocks[..., 0, 0].copy()
    if p == 2:
        return (blocks[..., 0, 0] * blocks[..., 1, 1]
                - blocks[..., 0, 1] * blocks[..., 1, 0])
    if p == 3:
        a = blocks
        return (a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
                - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
                + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]))
    if p == 4:
        total = np.zeros(blocks.shape[:-2])
        cols = np.arange(4)
        for j in range(4):
            sub = blocks[..., 1:, :][..., :, cols != j]
            cof = _det_stack(sub)
            term = blocks[..., 0, j] * cof
            total = total + term if j % 2 == 0 else total - term
        return total
    return np.linalg.det(blocks)


@dataclass(frozen=True)
class ExteriorMatrix:
    """A compound matrix together with its provenance (base_dim, power)."""

    base_dim: int
    power: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def exterior_power(m, p: int) -> ExteriorMatrix:
    """The p-th compound of a square matrix.

    Parameters
    ----------
    m : array_like
        Square d-by-d matrix.
    p : int
        Compound order, ``1 <= p <= d`` with ``C(d, p) <= EXTERIOR_DIM_CAP``.

    Returns
    -------
    ExteriorMatrix
        ``matrix[i, j]`` is the minor of ``m`` on the i-th row subset and
        j-th column subset of :func:`subset_enumeration`.

    Notes
    -----
    Minors are recomputed from scratch on every call; nothing is cached,
    so concurrent trajectories can never observe each other's factors.
    """
    a = as_square(m)
    d = a.shape[0]
    if not 1 <= p <= d:
        raise ValueError(f"compound order must lie in [1, {d}], got {p}")
    c = comb(d, p)
    if c > EXTERIOR_DIM_CAP:
        raise ValueError(
            f"compound dimension C({d},{p}) = {c} exceeds the cap {EXTERIOR_DIM_CAP}"
        )
    if p == 1:
        return ExteriorMatrix(base_dim=d, power=1, matrix=a.copy())
    subs = np.array(list(combinations(range(d), p)))  # zero-based, dictionary order
    blocks = a[subs[:, None, :, None], subs[None, :, None, :]]
    return ExteriorMatrix(base_dim=d, power=p, matrix=_det_stack(blocks))
