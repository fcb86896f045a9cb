"""Monte Carlo harness: trajectories, limit-theorem statistics, persistence.

A trajectory is one realized product of ``n_max`` i.i.d. factors,
checkpointed on a fixed schedule.  Everything downstream (gap decay,
alignment, exponent estimates, CLT matching) reads the persisted
checkpoint records, so a statistic can always be recomputed without
re-running the product.

Reproducibility contract: a record is a pure function of
``(ensemble spec, master_seed, trajectory_index)``.  Worker processes
re-derive their generators from those three values, which is what makes
aggregate output independent of the worker count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import ScaledProduct, SpectrumSnapshot
from .ensembles import EnsembleSpec, condition_check, sample_batch
from .rng import STREAM_PROBE, STREAM_TRAJECTORY, STREAM_WITNESS, child_rng

__all__ = [
    "ExperimentError",
    "TrajectoryRecord",
    "GapSummary",
    "run_trajectory",
    "run_many",
    "gap_statistic",
    "gap_summary",
    "alignment_statistic",
    "exponent_estimates",
    "ExponentEstimate",
    "clt_match",
    "clt_samples",
    "CltMatch",
    "ks_distance",
    "persist",
    "load",
    "SCHEMA_VERSION",
    "GAP_NOISE_FLOOR",
    "ALIGN_UNIT_SLACK",
]

SCHEMA_VERSION = 1

# |log lambda - log sigma| below this is factorization rounding, not
# signal; the gap statistic reports it as exactly zero so that isometry
# ensembles satisfy their identically-zero invariant.  Well below any
# genuine finite-n gap, which is O(1) in n.
GAP_NOISE_FLOOR = 1e-12

# |<probe, direction>| within this of one counts as aligned: the log is
# snapped to exactly 0.0 (a unit inner product cannot exceed one; the
# excess is rounding).
ALIGN_UNIT_SLACK = 1e-12


class ExperimentError(RuntimeError):
    """Bad statistic request or malformed record file."""


@dataclass(frozen=True)
class TrajectoryRecord:
    """Checkpointed spectral history of one realized product.

    ``alignment`` rows are ``(n, probe_label, log_abs_v, log_abs_u)``:
    log absolute inner products of the probe with the top right (v) and
    left (u) singular directions.  Entries are None at checkpoints where
    the top direction was unresolved, and ``-inf`` for an exactly
    orthogonal probe.  ``wall_time`` is diagnostic only: it is excluded
    from equality and never persisted.
    """

    spec_hash: str
    master_seed: int
    trajectory_index: int
    n_max: int
    max_p: int
    condition_status: str
    transposed: bool
    resample_count: int
    snapshots: tuple
    alignment: tuple
    wall_time: float = field(default=0.0, compare=False)

    @property
    def terminal(self) -> SpectrumSnapshot:
        return self.snapshots[-1]

    @property
    def trusted_p(self) -> int:
        return min(s.trusted_p for s in self.snapshots)


def checkpoint_schedule(n_max: int, stride: int | None = None) -> tuple:
    """Strictly increasing checkpoint times ending exactly at ``n_max``."""
    if n_max < 1:
        raise ExperimentError(f"n_max must be positive, got {n_max}")
    if stride is None:
        stride = max(1, n_max // 8)
    if stride < 1:
        raise ExperimentError(f"stride must be positive, got {stride}")
    points = list(range(stride, n_max + 1, stride))
    if not points or points[-1] != n_max:
        points.append(n_max)
    return tuple(points)


def _log_abs_inner(probe: np.ndarray, direction) -> float:
    if direction is None:
        return None
    ip = abs(float(np.dot(probe, np.asarray(direction))))
    if ip >= 1.0 - ALIGN_UNIT_SLACK:
        return 0.0
    if ip == 0.0:
        return float("-inf")
    return math.log(ip)


def run_trajectory(spec: EnsembleSpec, n_max: int, max_p: int,
                   probes=None, master_seed: int = 0, index: int = 0,
                   stride: int | None = None,
                   condition_status: str | None = None,
                   transpose: bool = False) -> TrajectoryRecord:
    """Realize one product of ``n_max`` factors and checkpoint it.

    ``probes`` is a sequence of ``(label, unit_vector)`` pairs evaluated
    at every checkpoint; default is the second coordinate axis.  One
    fresh random probe per checkpoint is always added, drawn from a
    generator stream independent of the trajectory stream.  ``transpose``
    pushes the transposed factors (the factor distribution's adjoint).
    """
    start = time.perf_counter()
    if condition_status is None:
        condition_status = condition_check(
            spec, rng=child_rng(master_seed, STREAM_WITNESS)).status
    if probes is None:
        e2 = np.zeros(spec.dim)
        e2[min(1, spec.dim - 1)] = 1.0
        probes = (("e2", e2),)
    probes = tuple((str(lab), np.asarray(v, dtype=float)) for lab, v in probes)
    for lab, v in probes:
        if v.shape != (spec.dim,):
            raise ExperimentError(f"probe {lab!r} has shape {v.shape}, "
                                  f"expected ({spec.dim},)")

    schedule = checkpoint_schedule(n_max, stride)
    traj_rng = child_rng(master_seed, STREAM_TRAJECTORY, index)
    probe_rng = child_rng(master_seed, STREAM_PROBE, index)
    counters = {}
    factors = sample_batch(spec, traj_rng, n_max, counters=counters)

    engine = ScaledProduct(spec.dim, lift_max_p=max_p)
    alignment = []
    pending = set(schedule)
    for k in range(n_max):
        y = factors[k].T if transpose else factors[k]
        engine.push(y)
        if engine.n in pending:
            snap = engine.snapshot(max_p=None)
            # the random probe is drawn whether or not the direction
            # resolved, so the probe stream stays aligned across ensembles
            z = probe_rng.normal(size=spec.dim)
            rand_probe = z / np.linalg.norm(z)
            for lab, v in probes + (("random", rand_probe),):
                alignment.append((snap.n, lab,
                                  _log_abs_inner(v, snap.v1),
                                  _log_abs_inner(v, snap.u1)))

    return TrajectoryRecord(
        spec_hash=spec.spec_hash(),
        master_seed=int(master_seed),
        trajectory_index=int(index),
        n_max=int(n_max),
        max_p=int(max_p),
        condition_status=condition_status,
        transposed=bool(transpose),
        resample_count=int(counters.get("singular_resample", 0)),
        snapshots=tuple(engine.checkpoints),
        alignment=tuple(alignment),
        wall_time=time.perf_counter() - start,
    )


def _run_one(args) -> TrajectoryRecord:
    (spec, n_max, max_p, probes, master_seed, index, stride,
     condition_status, transpose) = args
    return run_trajectory(spec, n_max, max_p, probes=probes,
                          master_seed=master_seed, index=index,
                          stride=stride, condition_status=condition_status,
                          transpose=transpose)


def run_many(spec: EnsembleSpec, n_max: int, max_p: int, count: int,
             probes=None, master_seed: int = 0, stride: int | None = None,
             workers: int = 1, transpose: bool = False) -> list:
    """``count`` independent trajectories, sorted by index.

    The condition check runs once up front; its verdict is attached to
    every record but never blocks (ensembles that fail the sufficient
    conditions are legitimate negative examples).  Output is identical
    for any worker count.
    """
    if count < 1:
        raise ExperimentError(f"count must be positive, got {count}")
    status = condition_check(spec,
                             rng=child_rng(master_seed, STREAM_WITNESS)).status
    jobs = [(spec, n_max, max_p, probes, master_seed, i, stride, status,
             transpose) for i in range(count)]
    if workers <= 1:
        records = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=8))
    records.sort(key=lambda r: r.trajectory_index)
    return records


# -- statistics -----------------------------------------------------------


def gap_statistic(record: TrajectoryRecord, p: int, r: float):
    """Series of ``(n, (log|lambda_p| - log sigma_p) / n^r)`` per checkpoint.

    Differences inside the rounding floor are reported as exactly zero.
    ``p`` must lie within the record's trusted depth.
    """
    trusted = record.trusted_p
    if not 1 <= p <= trusted:
        raise ExperimentError(
            f"p={p} outside the trusted range [1, {trusted}] of this record")
    if not r > 0:
        raise ExperimentError(f"r must be positive, got {r}")
    out = []
    for snap in record.snapshots:
        num = snap.log_eigen_moduli[p - 1] - snap.log_sigmas[p - 1]
        if abs(num) <= GAP_NOISE_FLOOR * max(1.0, abs(snap.log_sigmas[p - 1])):
            num = 0.0
        out.append((snap.n, num / snap.n ** r))
    return out


@dataclass(frozen=True)
class GapSummary:
    """Ensemble roll-up of the gap statistic at fixed ``(p, r)``."""

    p: int
    r: float
    terminal_values: tuple
    quantiles: tuple          # (q25, median, q75, q975) of |terminal|
    median_abs_by_n: tuple    # ((n, median |value|), ...) across records
    decay_slope: float | None  # slope of log median|value| vs log n


def gap_summary(records, p: int, r: float) -> GapSummary:
    if not records:
        raise ExperimentError("no records")
    series = [gap_statistic(rec, p, r) for rec in records]
    ns = [n for n, _ in series[0]]
    for s in series:
        if [n for n, _ in s] != ns:
            raise ExperimentError("records disagree on the checkpoint schedule")
    values = np.array([[v for _, v in s] for s in series])  # (N, len(ns))
    terminal = values[:, -1]
    abs_term = np.abs(terminal)
    quantiles = tuple(float(np.quantile(abs_term, q))
                      for q in (0.25, 0.5, 0.75, 0.975))
    med_by_n = tuple((int(n), float(np.median(np.abs(values[:, j]))))
                     for j, n in enumerate(ns))
    positive = [(n, m) for n, m in med_by_n if m > 0.0]
    slope = None
    if len(positive) >= 2:
        xs = np.log([n for n, _ in positive])
        ys = np.log([m for _, m in positive])
        slope = float(np.polyfit(xs, ys, 1)[0])
    return GapSummary(p=p, r=float(r), terminal_values=tuple(map(float, terminal)),
                      quantiles=quantiles, median_abs_by_n=med_by_n,
                      decay_slope=slope)


def alignment_statistic(record: TrajectoryRecord, r: float):
    """Rows ``(n, probe_label, v_value, u_value)``; values are
    ``log|<probe, direction>| / n^r``, None where unresolved."""
    if not r > 0:
        raise ExperimentError(f"r must be positive, got {r}")
    out = []
    for n, lab, lv, lu in record.alignment:
        scale = n ** r
        out.append((n, lab,
                    None if lv is None else lv / scale,
                    None if lu is None else lu / scale))
    return out


@dataclass(frozen=True)
class ExponentEstimate:
    """Terminal-slope estimate of the p-th Lyapunov and stability exponents."""

    p: int
    gamma: float
    gamma_se: float
    delta: float
    delta_se: float
    trajectories: int


def exponent_estimates(records, p: int) -> ExponentEstimate:
    """Average terminal ``(1/n) log`` values across trajectories.

    Standard errors are across-trajectory; at least two records are
    required for them to mean anything.
    """
    if len(records) < 2:
        raise ExperimentError("need at least 2 records for standard errors")
    trusted = min(rec.trusted_p for rec in records)
    if not 1 <= p <= trusted:
        raise ExperimentError(
            f"p={p} outside the trusted range [1, {trusted}] of these records")
    g = np.array([rec.terminal.log_sigmas[p - 1] / rec.terminal.n
                  for rec in records])
    d = np.array([rec.terminal.log_eigen_moduli[p - 1] / rec.terminal.n
                  for rec in records])
    root = math.sqrt(len(records))
    return ExponentEstimate(
        p=p,
        gamma=float(g.mean()), gamma_se=float(g.std(ddof=1) / root),
        delta=float(d.mean()), delta_se=float(d.std(ddof=1) / root),
        trajectories=len(records),
    )


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    from scipy.stats import ks_2samp
    return float(ks_2samp(np.asarray(a), np.asarray(b)).statistic)


@dataclass(frozen=True)
class CltMatch:
    """KS comparison of the root-n fluctuations of the two top read-outs."""

    ks: float
    sample_count: int
    terminal_n: int


def clt_samples(records, gamma1_center: float):
    """The two root-n fluctuation samples ``(sigma_route, eigen_route)``.

    Entry k of each array is ``sqrt(n)((1/n) log x_1(n) - center)`` for
    trajectory k at the common terminal n.
    """
    ns = {rec.terminal.n for rec in records}
    if len(ns) != 1:
        raise ExperimentError(f"records end at different n: {sorted(ns)}")
    n = ns.pop()
    root = math.sqrt(n)
    sig = np.array([root * (rec.terminal.log_sigmas[0] / n - gamma1_center)
                    for rec in records])
    eig = np.array([root * (rec.terminal.log_eigen_moduli[0] / n - gamma1_center)
                    for rec in records])
    return sig, eig


def clt_match(records, gamma1_center: float) -> CltMatch:
    """KS distance between ``sqrt(n)((1/n)log sigma_1 - c)`` and the
    ``log|lambda_1|`` analogue across trajectories.

    ``gamma1_center`` must come from an independent pilot batch, never
    from ``records`` themselves (self-centering hides nothing here: a
    common shift cancels in the KS distance, but the discipline keeps
    the two samples honestly comparable to the stated limit law).
    At least 100 records at one common terminal n are required.
    """
    if len(records) < 100:
        raise ExperimentError(
            f"need at least 100 records for a usable KS sample, got {len(records)}")
    sig, eig = clt_samples(records, gamma1_center)
    return CltMatch(ks=ks_distance(sig, eig), sample_count=len(records),
                    terminal_n=records[0].terminal.n)


# -- persistence ----------------------------------------------------------


_JSON_KW = dict(sort_keys=True, separators=(",", ":"), allow_nan=True)


def _snapshot_to_obj(snap: SpectrumSnapshot) -> dict:
    return {
        "n": snap.n,
        "log_sigmas": list(snap.log_sigmas),
        "log_eigen_moduli": list(snap.log_eigen_moduli),
        "u1": None if snap.u1 is None else list(snap.u1),
        "v1": None if snap.v1 is None else list(snap.v1),
        "trusted_p": snap.trusted_p,
        "notes": list(snap.notes),
    }


def _snapshot_from_obj(obj: dict) -> SpectrumSnapshot:
    return SpectrumSnapshot(
        n=int(obj["n"]),
        log_sigmas=tuple(float(x) for x in obj["log_sigmas"]),
        log_eigen_moduli=tuple(float(x) for x in obj["log_eigen_moduli"]),
        u1=None if obj["u1"] is None else tuple(float(x) for x in obj["u1"]),
        v1=None if obj["v1"] is None else tuple(float(x) for x in obj["v1"]),
        trusted_p=int(obj["trusted_p"]),
        notes=tuple(obj["notes"]),
    )


def _record_to_obj(rec: TrajectoryRecord) -> dict:
    return {
        "spec_hash": rec.spec_hash,
        "master_seed": rec.master_seed,
        "trajectory_index": rec.trajectory_index,
        "n_max": rec.n_max,
        "max_p": rec.max_p,
        "condition_status": rec.condition_status,
        "transposed": rec.transposed,
        "resample_count": rec.resample_count,
        "snapshots": [_snapshot_to_obj(s) for s in rec.snapshots],
        "alignment": [list(row) for row in rec.alignment],
    }


def _record_from_obj(obj: dict) -> TrajectoryRecord:
    alignment = tuple(
        (int(n), str(lab),
         None if lv is None else float(lv),
         None if lu is None else float(lu))
        for n, lab, lv, lu in obj["alignment"])
    return TrajectoryRecord(
        spec_hash=str(obj["spec_hash"]),
        master_seed=int(obj["master_seed"]),
        trajectory_index=int(obj["trajectory_index"]),
        n_max=int(obj["n_max"]),
        max_p=int(obj["max_p"]),
        condition_status=str(obj["condition_status"]),
        transposed=bool(obj["transposed"]),
        resample_count=int(obj["resample_count"]),
        snapshots=tuple(_snapshot_from_obj(s) for s in obj["snapshots"]),
        alignment=alignment,
    )


def persist(records, path, manifest: dict | None = None) -> None:
    """Write records as JSON Lines under a schema-versioned header line.

    Floats survive the round trip bit-exactly (shortest-repr encoding;
    infinities are legal values here).  Wall times are not written.
    """
    header = {"schema": SCHEMA_VERSION, "kind": "lyaplab-trajectories",
              "count": len(records), "manifest": manifest or {}}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, **_JSON_KW) + "\n")
        for rec in records:
            fh.write(json.dumps(_record_to_obj(rec), **_JSON_KW) + "\n")


def load(path):
    """Read a record file back; returns ``(manifest, records)``.

    Raises ExperimentError naming the offending line for parse failures,
    schema mismatches, or a record count that disagrees with the header.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ExperimentError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ExperimentError(f"{path}: line 1: bad header: {exc}") from exc
    schema = header.get("schema")
    if schema != SCHEMA_VERSION:
        raise ExperimentError(
            f"{path}: line 1: schema {schema!r} not supported, this build "
            f"reads schema {SCHEMA_VERSION}")
    records = []
    for k, line in enumerate(lines[1:], start=2):
        try:
            records.append(_record_from_obj(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ExperimentError(f"{path}: line {k}: {exc}") from exc
    if len(records) != header.get("count"):
        raise ExperimentError(
            f"{path}: header promises {header.get('count')} records, "
            f"found {len(records)} (truncated file?)")
    return header.get("manifest", {}), records
