"""Projective directions, the sine metric, and contraction functionals.

Directions are unit vectors in canonical form (first non-zero coordinate
positive), so each line through the origin has exactly one
representative.  The metric is

    delta(u, v) = sqrt(1 - <u, v>^2),

the sine of the angle between the lines.  It is evaluated through the
2-by-2 minors of the pair (the wedge-product norm), which keeps full
relative accuracy for nearly coincident directions where the inner
product formulation cancels catastrophically.

The two contraction functionals estimated here are averages over finite
pair/probe families, so both are *lower bounds of a suprema*; every
result object says so on its face.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleSpec, condition_check, sample_batch
from .rng import STREAM_CONTRACTION, STREAM_INTEGRAL, STREAM_MEASURE, child_rng

__all__ = [
    "EmpiricalDirectionMeasure",
    "AEstimate",
    "BEstimate",
    "canonicalize",
    "delta",
    "act",
    "random_direction",
    "estimate_invariant_measure",
    "furstenberg_gamma1",
    "estimate_A",
    "estimate_B",
    "save_atoms_csv",
]

log = logging.getLogger(__name__)

SUP_CAVEAT = "lower bound of a sup"

# Image norms below this are treated as a numerically-null image: the
# direction of m @ u is no longer meaningful in double precision.
NULL_IMAGE_FLOOR = 1e-300

# Probe inner products below this are reported as an orthogonal probe
# (infinite integrand) rather than fed into a reciprocal power.
ORTHOGONAL_PROBE_FLOOR = 1e-15

# A delta-ratio this close to 1 is indistinguishable from an exact
# isometry: applying the product drifts the pair by O(n * eps) and the
# minor-form delta carries relative noise up to eps / separation (about
# 1e-10 at the tightest 1e-6 pairs).  Such ratios are snapped to 1 so
# isometric ensembles report ratio 1 exactly; genuinely contracting or
# expanding ratios sit far outside this band.
ISOMETRY_RATIO_SLACK = 1e-9


def canonicalize(v) -> np.ndarray:
    """Unit representative of the line through ``v``, canonical sign."""
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"expected a vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("direction has non-finite entries")
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        raise ValueError("zero vector has no direction")
    u = a / norm
    for x in u:
        if x != 0.0:
            if x < 0.0:
                u = -u
            break
    return u


def delta(u, v) -> float:
    """Sine metric between the lines spanned by unit vectors u and v.

    Evaluated as the Frobenius norm of ``u v^T - v u^T`` over sqrt(2),
    which equals sqrt(1 - <u,v>^2) exactly but stays relatively accurate
    down to delta of order 1e-15.
    """
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    outer = a[:, None] * b[None, :]
    d = float(np.linalg.norm(outer - outer.T) / math.sqrt(2.0))
    return min(d, 1.0)


def _delta_columns(us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """delta for each column pair of two (d, k) stacks of unit vectors."""
    outer = us[:, None, :] * vs[None, :, :]
    skew = outer - outer.transpose(1, 0, 2)
    return np.minimum(np.sqrt((skew * skew).sum(axis=(0, 1)) / 2.0), 1.0)


def act(m, u) -> np.ndarray:
    """Image of direction ``u`` under the invertible map ``m``."""
    a = np.asarray(m, dtype=float)
    w = a @ np.asarray(u, dtype=float)
    if float(np.linalg.norm(w)) < NULL_IMAGE_FLOOR:
        raise ValueError("image norm below 1e-300: direction numerically lost")
    return canonicalize(w)


def random_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniform random canonical direction."""
    while True:
        z = rng.normal(size=dim)
        if np.linalg.norm(z) > 0.0:
            return canonicalize(z)


@dataclass(frozen=True)
class EmpiricalDirectionMeasure:
    """Equal-weight atoms on projective space, rows canonical unit."""

    atoms: np.ndarray

    @property
    def count(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def weight(self) -> float:
        return 1.0 / self.count


def estimate_invariant_measure(spec: EnsembleSpec, burn_in: int | None = None,
                               count: int = 10_000, master_seed: int = 0,
                               override: bool = False) -> EmpiricalDirectionMeasure:
    """Empirical stationary direction measure from independent chains.

    Each of ``count`` chains starts at an independent uniform direction,
    applies ``burn_in`` (default 50 * dim) fresh factor draws, and
    contributes its endpoint as one atom.  Chains own child generators
    derived from the master seed, so the result is independent of any
    execution order.

    Raises unless the condition checker passes or ``override`` is given;
    without contraction and strong irreducibility there is no unique
    stationary measure to estimate.
    """
    if burn_in is None:
        burn_in = 50 * spec.dim
    if burn_in < 1 or count < 1:
        raise ValueError("burn_in and count must be positive")
    report = condition_check(spec, rng=child_rng(master_seed, STREAM_MEASURE, 0, 0))
    if report.status == "fail" and not override:
        raise ValueError(
            "ensemble failed the sufficient-condition check "
            f"({report.verdict_lines[-1]}); pass override=True to force")
    if report.status == "unknown":
        log.info("conditions unknown for %s; estimating anyway", spec.label())
    d = spec.dim
    atoms = np.empty((count, d))
    for i in range(count):
        rng = child_rng(master_seed, STREAM_MEASURE, 1, i)
        x = random_direction(rng, d)
        mats = sample_batch(spec, rng, burn_in)
        for m in mats:
            w = m @ x
            norm = np.linalg.norm(w)
            if norm < NULL_IMAGE_FLOOR:
                raise ValueError("chain direction numerically lost")
            x = w / norm
        atoms[i] = canonicalize(x)
    return EmpiricalDirectionMeasure(atoms=atoms)


def furstenberg_gamma1(spec: EnsembleSpec, nu: EmpiricalDirectionMeasure,
                       samples: int = 50_000, master_seed: int = 0) -> tuple[float, float]:
    """Top Lyapunov exponent as the invariant-measure average of log |M x|.

    Independent pairs (factor draw, atom draw) are averaged; returns
    ``(estimate, standard_error)``.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    rng = child_rng(master_seed, STREAM_INTEGRAL)
    mats = sample_batch(spec, rng, samples)
    idx = rng.integers(0, nu.count, size=samples)
    images = np.einsum("kij,kj->ki", mats, nu.atoms[idx])
    vals = 0.5 * np.log((images * images).sum(axis=1))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


@dataclass(frozen=True)
class AEstimate:
    """Average-contraction estimate at exponent alpha and horizon n."""

    value: float
    alpha: float
    n: int
    pair_count: int
    samples: int
    caveat: str = SUP_CAVEAT


def estimate_A(spec: EnsembleSpec, alpha: float = 0.5, n: int = 20,
               pair_count: int = 40, master_seed: int = 0,
               samples: int = 200) -> AEstimate:
    """n-th root of the worst mean delta-ratio power over a pair family.

    For each direction pair (u, v) the Monte Carlo mean of
    ``(delta(S u, S v) / delta(u, v))^alpha`` over ``samples`` product
    realizations is formed; the estimate is the maximum over pairs, taken
    to the 1/n power.  The family holds ``pair_count`` independent random
    pairs plus near-coincident pairs at separations 1e-1, 1e-3, 1e-6
    around three random centers, probing the limit that dominates the
    supremum.  A finite family only ever reaches a lower bound of the
    supremum; the result says so.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if n < 1 or pair_count < 1 or samples < 1:
        raise ValueError("n, pair_count, samples must be positive")
    d = spec.dim
    rng = child_rng(master_seed, STREAM_CONTRACTION)

    us, vs = [], []
    for _ in range(pair_count):
        us.append(random_direction(rng, d))
        vs.append(random_direction(rng, d))
    for _ in range(3):
        center = random_direction(rng, d)
        z = rng.normal(size=d)
        w = z - (z @ center) * center
        w /= np.linalg.norm(w)
        for sep in (1e-1, 1e-3, 1e-6):
            us.append(center)
            vs.append(canonicalize(math.sqrt(1.0 - sep * sep) * center + sep * w))
    ucols = np.array(us).T  # (d, P)
    vcols = np.array(vs).T
    base = _delta_columns(ucols, vcols)

    total = np.zeros(ucols.shape[1])
    factors = sample_batch(spec, rng, n * samples).reshape(samples, n, d, d)
    for k in range(samples):
        iu, iv = ucols.copy(), vcols.copy()
        for m in factors[k]:
            iu = m @ iu
            iv = m @ iv
            iu /= np.linalg.norm(iu, axis=0)
            iv /= np.linalg.norm(iv, axis=0)
        ratio = _delta_columns(iu, iv) / base
        ratio[np.abs(ratio - 1.0) <= ISOMETRY_RATIO_SLACK] = 1.0
        total += ratio ** alpha
    worst = float(np.max(total / samples))
    return AEstimate(value=float(worst ** (1.0 / n)), alpha=alpha, n=n,
                     pair_count=pair_count, samples=samples)


@dataclass(frozen=True)
class BEstimate:
    """Probe-aligned reciprocal-moment estimate against an atom measure.

    ``probe_values[k]`` is the atom average for ``probes[k]`` (the d
    coordinate axes first, then the random probes); ``value`` is their
    maximum.
    """

    value: float
    beta: float
    probes: np.ndarray
    probe_values: np.ndarray
    orthogonal_probes: int
    caveat: str = SUP_CAVEAT

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


def estimate_B(nu: EmpiricalDirectionMeasure, beta: float = 0.5,
               probe_count: int = 64, master_seed: int = 0) -> BEstimate:
    """Worst probe average of ``|<x, y>|^(-beta)`` over the atoms x.

    Probes y are the coordinate axes plus ``probe_count`` random unit
    directions.  An atom numerically orthogonal to a probe (inner product
    below 1e-15) makes that probe's average infinite; the count of such
    probes is reported.  A finite probe family reaches a lower bound of
    the supremum over all unit y.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    d = nu.dim
    rng = child_rng(master_seed, STREAM_CONTRACTION, 1)
    probes = [np.eye(d)[i] for i in range(d)]
    probes += [random_direction(rng, d) for _ in range(probe_count)]
    probe_arr = np.array(probes)
    ips = np.abs(nu.atoms @ probe_arr.T)  # (count, P)
    orthogonal = ips < ORTHOGONAL_PROBE_FLOOR
    bad = int(np.any(orthogonal, axis=0).sum())
    with np.errstate(divide="ignore"):
        vals = np.where(orthogonal, np.inf, np.where(orthogonal, 1.0, ips) ** (-beta))
    means = vals.mean(axis=0)
    return BEstimate(value=float(np.max(means)), beta=beta, probes=probe_arr,
                     probe_values=means, orthogonal_probes=bad)


def save_atoms_csv(nu: EmpiricalDirectionMeasure, path) -> None:
    """Write the atoms as CSV, one canonical direction per row."""
    header = ",".join(f"x{i + 1}" for i in range(nu.dim))
    lines = [header]
    for row in nu.atoms:
        lines.append(",".join(repr(float(x)) for x in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
