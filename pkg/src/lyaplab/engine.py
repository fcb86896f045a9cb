"""Scaled accumulation of long matrix products.

Forming ``S_n = Y_n ... Y_1`` directly overflows after a few hundred
factors, so the running product is stored as ``exp(log_scale) * b`` with
``b`` of spectral norm one.  Each push renormalizes, and the scale
telescopes to ``log |S_n|`` to machine accuracy.

Three read-outs coexist and are never collapsed into one:

* direct route: singular values and eigenvalue moduli of ``b`` shifted
  by ``log_scale``.  Exact for the leading part of the spectrum, loses
  the tail once the condition number of ``b`` passes ``1/eps``;
* lift route: the same engine run on exterior powers of the factors.
  The norm of the p-th lift is the product of the top p singular values
  and its top eigenvalue modulus is the product of the top p eigenvalue
  moduli, so consecutive differences of the lift scales recover the
  p-th singular value and eigenvalue modulus at full depth, each lift
  being renormalized on its own;
* orthogonal-frame route (Benettin): a QR frame dragged through the
  product accumulates per-slot diagonal logarithms.  Asymptotically the
  slot rates match the Lyapunov spectrum, but at finite n the slot sums
  carry an O(1) offset against ``log sigma_p``, so this route is a
  cross-check on rates, not on values.

The per-slot QR sums always total ``log |det S_n|`` exactly, which is
the volume-growth invariant used by the self-consistency tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exterior import exterior_power
from .linalg import LinalgError, SvdResult, as_square, eigen_moduli, svd
from .projective import canonicalize

__all__ = [
    "EngineError",
    "SpectrumSnapshot",
    "ScaledProduct",
    "SIGMA_TRUST_FLOOR",
    "TOP_GAP_SLACK",
]

# Singular values / eigen moduli of the normalized core below this are
# dominated by factorization noise (absolute error ~eps relative to the
# top); anything smaller is reported but not trusted.
SIGMA_TRUST_FLOOR = 1e-13

# Relative gap needed between the two leading singular values of the
# normalized core before the top direction pair is considered resolved.
TOP_GAP_SLACK = 1e-9


class EngineError(RuntimeError):
    """Push rejected or a factorization kernel failed beyond retry."""


@dataclass(frozen=True)
class SpectrumSnapshot:
    """Spectral read-out of the running product after ``n`` factors.

    ``log_sigmas`` and ``log_eigen_moduli`` are full-length (one entry
    per dimension), descending.  Entries with index below ``trusted_p``
    come from a route that is reliable at this depth; beyond that they
    are direct read-outs of the normalized core and may be noise.
    ``u1``/``v1`` are the canonical top left/right singular directions,
    or None when the leading singular gap is unresolved (the accompanying
    note says so).
    """

    n: int
    log_sigmas: tuple
    log_eigen_moduli: tuple
    u1: tuple | None
    v1: tuple | None
    trusted_p: int
    notes: tuple


def _fixed_rotation(dim: int) -> np.ndarray:
    # Deterministic orthogonal similarity used only as an eigenvalue
    # retry; the constant seed is not part of any experiment stream.
    gen = np.random.Generator(np.random.PCG64(987654321 + dim))
    q, _ = np.linalg.qr(gen.normal(size=(dim, dim)))
    return q


class ScaledProduct:
    """Running product of invertible factors, stored renormalized.

    Parameters
    ----------
    dim : int
        Dimension of the factors.
    lift_max_p : int
        Highest exterior power tracked alongside the base product
        (1 means none).  Each lift costs one compound matrix and one
        SVD per push.
    """

    def __init__(self, dim: int, lift_max_p: int = 1):
        if not 1 <= dim:
            raise EngineError(f"dimension must be positive, got {dim}")
        if not 1 <= lift_max_p <= dim:
            raise EngineError(
                f"lift_max_p must lie in [1, {dim}], got {lift_max_p}")
        self.dim = int(dim)
        self.lift_max_p = int(lift_max_p)
        self.n = 0
        self.b = np.eye(self.dim)
        self.log_scale = 0.0
        self.qr_q = np.eye(self.dim)
        self.qr_logdiag = np.zeros(self.dim)
        self.notes: list[str] = []
        self.checkpoints: list[SpectrumSnapshot] = []
        self._svd_b = SvdResult(u=np.eye(self.dim),
                                sigmas=np.ones(self.dim),
                                v=np.eye(self.dim))
        # Base engines reject exactly-singular factors; the internal lift
        # engines must not, because the determinant of a compound of a
        # healthy factor can underflow to zero.
        self._reject_singular = True
        self._lifts = {p: ScaledProduct(math.comb(self.dim, p))
                       for p in range(2, self.lift_max_p + 1)}
        for lift in self._lifts.values():
            lift._reject_singular = False

    def push(self, y) -> None:
        """Multiply the running product on the left by ``y``."""
        a = as_square(y)
        if a.shape[0] != self.dim:
            raise EngineError(
                f"factor dimension {a.shape[0]} does not match engine "
                f"dimension {self.dim}")
        if self._reject_singular and np.linalg.det(a) == 0.0:
            raise EngineError(
                "factor matrix is singular; draw another sample instead")
        m = a @ self.b
        res = svd(m)
        s1 = float(res.sigmas[0])
        if s1 == 0.0:
            raise EngineError("product collapsed to zero")
        self.b = m / s1
        self._svd_b = SvdResult(u=res.u, sigmas=res.sigmas / s1, v=res.v)
        self.log_scale += math.log(s1)
        # Benettin frame: QR of (factor @ frame), log|diag R| per slot.
        q, r = np.linalg.qr(a @ self.qr_q)
        with np.errstate(divide="ignore"):
            self.qr_logdiag += np.log(np.abs(np.diag(r)))
        self.qr_q = q
        for p, lift in self._lifts.items():
            lift.push(exterior_power(a, p).matrix)
        self.n += 1

    # -- singular value read-outs -------------------------------------

    def log_singular_values(self, method: str = "direct_svd") -> np.ndarray:
        """Length-``dim`` descending array of ``log sigma_p(S_n)`` estimates.

        ``direct_svd`` shifts the core's singular values by the scale;
        ``qr_accumulated`` returns the sorted Benettin slot sums, which
        approximate the same quantities only up to an O(1) offset.
        """
        if method == "direct_svd":
            with np.errstate(divide="ignore"):
                return self.log_scale + np.log(self._svd_b.sigmas)
        if method == "qr_accumulated":
            return np.sort(self.qr_logdiag)[::-1].copy()
        raise ValueError(f"unknown method {method!r}")

    def lift_norm_sums(self) -> np.ndarray:
        """Partial sums ``c_p = log(sigma_1 ... sigma_p)``, p = 0..lift_max_p."""
        c = np.zeros(self.lift_max_p + 1)
        c[1] = self.log_scale
        for p, lift in self._lifts.items():
            c[p] = lift.log_scale
        return c

    def log_singular_values_from_lifts(self) -> np.ndarray:
        """``log sigma_p`` for p up to ``lift_max_p``, via lift scale differences.

        Robust at any depth: every lift renormalizes independently, so no
        entry is lost to underflow of the core.
        """
        return np.diff(self.lift_norm_sums())

    # -- eigenvalue read-outs -----------------------------------------

    def _top_eigen_log(self, core: np.ndarray, scale: float) -> float:
        try:
            moduli = eigen_moduli(core)
        except LinalgError:
            self.notes.append(
                f"n={self.n}: eigenvalue retry under a fixed rotation")
            q = _fixed_rotation(core.shape[0])
            try:
                moduli = eigen_moduli(q.T @ core @ q)
            except LinalgError as exc:
                raise EngineError(
                    "eigenvalue kernel failed twice on the same core") from exc
        top = float(moduli[0])
        if top == 0.0:
            raise EngineError("top eigenvalue underflowed to zero")
        return scale + math.log(top)

    def log_eigen_moduli_from_lifts(self) -> np.ndarray:
        """``log |lambda_p|`` for p up to ``lift_max_p``.

        The top eigenvalue modulus of the p-th lift is the product of the
        p largest moduli of the base product, so consecutive differences
        isolate the p-th one.
        """
        t = np.zeros(self.lift_max_p + 1)
        t[1] = self._top_eigen_log(self.b, self.log_scale)
        for p, lift in self._lifts.items():
            t[p] = lift._top_eigen_log(lift.b, lift.log_scale)
        return np.diff(t)

    # -- directions and snapshots -------------------------------------

    def top_directions(self):
        """Canonical top (left, right) singular directions of ``S_n``.

        Raises EngineError when the two leading singular values of the
        core are within relative ``TOP_GAP_SLACK`` of each other: the
        top direction of a near-isometry is not a meaningful read-out.
        """
        s = self._svd_b.sigmas
        if self.dim > 1 and not s[0] > s[1] * (1.0 + TOP_GAP_SLACK):
            raise EngineError(
                "top direction ill-defined: leading singular gap below "
                f"relative {TOP_GAP_SLACK}")
        return (canonicalize(self._svd_b.u[:, 0]),
                canonicalize(self._svd_b.v[:, 0]))

    def volume_log(self) -> float:
        """``log |det S_n|``, from the exact per-slot QR totals."""
        return float(self.qr_logdiag.sum())

    def snapshot(self, max_p: int | None = None) -> SpectrumSnapshot:
        """Record the current spectrum; appended to ``checkpoints``.

        ``max_p`` caps the claimed trust depth; default is the full
        dimension.  Lift-covered indices are always trusted; beyond the
        lifts an index is trusted only while the corresponding core
        singular value and eigenvalue modulus both clear
        ``SIGMA_TRUST_FLOOR``.
        """
        if max_p is None:
            max_p = self.dim
        if not 1 <= max_p <= self.dim:
            raise EngineError(f"max_p must lie in [1, {self.dim}], got {max_p}")
        sig = self.log_singular_values("direct_svd")
        sig[:self.lift_max_p] = self.log_singular_values_from_lifts()

        core_moduli = None
        try:
            core_moduli = eigen_moduli(self.b)
        except LinalgError:
            self.notes.append(
                f"n={self.n}: eigenvalue retry under a fixed rotation")
            q = _fixed_rotation(self.dim)
            core_moduli = eigen_moduli(q.T @ self.b @ q)
        with np.errstate(divide="ignore"):
            eig = self.log_scale + np.log(core_moduli)
        eig[:self.lift_max_p] = self.log_eigen_moduli_from_lifts()

        trusted = 0
        sig_core = self._svd_b.sigmas
        for p in range(1, max_p + 1):
            if p > self.lift_max_p and not (
                    sig_core[p - 1] > SIGMA_TRUST_FLOOR
                    and core_moduli[p - 1] > SIGMA_TRUST_FLOOR):
                break
            trusted = p

        u1 = v1 = None
        try:
            u, v = self.top_directions()
            u1, v1 = tuple(map(float, u)), tuple(map(float, v))
        except EngineError:
            self.notes.append(f"n={self.n}: top direction ill-defined")

        snap = SpectrumSnapshot(
            n=self.n,
            log_sigmas=tuple(map(float, sig)),
            log_eigen_moduli=tuple(map(float, eig)),
            u1=u1,
            v1=v1,
            trusted_p=trusted,
            notes=tuple(self.notes),
        )
        self.checkpoints.append(snap)
        return snap
