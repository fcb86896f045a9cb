"""Config-driven command line front end.

Subcommands::

    lyaplab check    --config run.cfg   sufficient-condition report
    lyaplab spectrum --config run.cfg   exponent table (gamma, delta)
    lyaplab gaps     --config run.cfg   eigenvalue/singular gap decay
    lyaplab align    --config run.cfg   top-direction alignment statistics
    lyaplab clt      --config run.cfg   KS match of root-n fluctuations
    lyaplab measure  --config run.cfg   invariant measure, A/B estimates

Common flags: ``--config PATH`` (required), ``--out DIR``, ``--seed N``,
``--workers N``.  ``LYAP_LOG`` sets log verbosity (DEBUG/INFO/WARNING).

Exit codes: 0 success; 1 config error; 2 condition-unknown (from
``check``; the argument parser also uses 2 for usage errors); 3
condition failure; 4 numerical-trust degradation (an eigenvalue kernel
needed a retry, or failed outright, while producing the outputs).

Every command writes ``manifest.txt`` with the resolved configuration,
code version, ensemble hash, and any frozen pilot thresholds used.
Worker count and wall time never enter any output file, so a rerun with
the same manifest is byte-identical at any parallelism.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__, report
from ._pilot import ALIGN_THRESHOLDS, GAP_THRESHOLDS
from .config import ConfigError, parse_config
from .engine import EngineError
from .ensembles import condition_check
from .experiments import (
    SCHEMA_VERSION,
    checkpoint_schedule,
    clt_match,
    exponent_estimates,
    persist,
    run_many,
)
from .projective import (
    estimate_A,
    estimate_B,
    estimate_invariant_measure,
    furstenberg_gamma1,
    save_atoms_csv,
)
from .rng import STREAM_WITNESS, child_rng

__all__ = ["main", "entry"]

log = logging.getLogger(__name__)

# Offset deriving the CLT centering pilot's seed from the run seed; any
# fixed value works, it only has to differ from the main batch.
PILOT_SEED_OFFSET = 999983

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNKNOWN = 2
EXIT_FAIL = 3
EXIT_DEGRADED = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyaplab",
        description="Spectral statistics of products of random matrices.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, descr in (
            ("check", "report which sufficient conditions the ensemble meets"),
            ("spectrum", "estimate Lyapunov and stability exponents"),
            ("gaps", "eigenvalue/singular-value gap decay statistics"),
            ("align", "top-direction alignment statistics"),
            ("clt", "KS match of the two root-n fluctuation samples"),
            ("measure", "invariant direction measure and A/B estimates")):
        p = sub.add_parser(name, help=descr)
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", help="output directory (default from config)")
        p.add_argument("--seed", type=int, help="override [run] master_seed")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel trajectory workers (output-invariant)")
    return parser


def _resolve(cfg, args):
    if args.seed is not None:
        cfg.run["master_seed"] = int(args.seed)
    out = Path(args.out if args.out else cfg.output["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest_items(cfg, command, spec, extra=None) -> dict:
    items = {
        "command": command,
        "code_version": __version__,
        "schema_version": str(SCHEMA_VERSION),
        "ensemble.label": spec.label(),
        "ensemble.spec_hash": spec.spec_hash(),
    }
    for row in cfg.items():
        key, _, value = row.partition("=")
        items[f"config.{key}"] = value
    if extra:
        items.update(extra)
    return items


def _degraded(records) -> bool:
    return any("retry" in note or "kernel" in note
               for rec in records for snap in rec.snapshots
               for note in snap.notes)


def _run_batch(cfg, spec, args, probes=None):
    cfg.require("n_max", "trajectories")
    run = cfg.run
    max_p = run["max_p"] if run["max_p"] is not None else spec.dim
    if not 1 <= max_p <= spec.dim:
        raise ConfigError(f"{cfg.path}: [run] max_p must lie in "
                          f"[1, {spec.dim}], got {max_p}")
    log.info("running %d trajectories of n_max=%d (workers=%d)",
             run["trajectories"], run["n_max"], args.workers)
    records = run_many(spec, n_max=run["n_max"], max_p=max_p,
                       count=run["trajectories"], probes=probes,
                       master_seed=run["master_seed"],
                       stride=run["checkpoint_stride"], workers=args.workers)
    schedule = checkpoint_schedule(run["n_max"], run["checkpoint_stride"])
    return records, max_p, schedule


def _write_records(out, records, manifest, cfg) -> None:
    if "jsonl" in cfg.output["formats"]:
        persist(records, out / "records.jsonl", manifest=manifest)


def cmd_check(cfg, args) -> int:
    spec = cfg.ensemble_spec()
    out = _resolve(cfg, args)
    rng = child_rng(cfg.run["master_seed"], STREAM_WITNESS)
    rep = condition_check(spec, tau=cfg.run["tau"], rng=rng)
    text = rep.verdict_text
    print(text)
    (out / "report.txt").write_text(text + "\n", encoding="utf-8")
    report.write_manifest(out / "manifest.txt",
                          _manifest_items(cfg, "check", spec))
    return {"pass": EXIT_OK, "unknown": EXIT_UNKNOWN,
            "fail": EXIT_FAIL}[rep.status]


def cmd_spectrum(cfg, args) -> int:
    spec = cfg.ensemble_spec()
    out = _resolve(cfg, args)
    records, max_p, schedule = _run_batch(cfg, spec, args)
    estimates = [exponent_estimates(records, p) for p in range(1, max_p + 1)]
    manifest = _manifest_items(cfg, "spectrum", spec, {
        "run.checkpoints": ",".join(str(n) for n in schedule),
        "run.resolved_max_p": str(max_p),
    })
    _write_records(out, records, manifest, cfg)
    if "csv" in cfg.output["formats"]:
        report.write_spectrum_csv(out / "spectrum.csv", estimates)
    if "png" in cfg.output["formats"]:
        report.figure_spectrum(out / "spectrum.png", estimates)
    report.write_manifest(out / "manifest.txt", manifest)
    for e in estimates:
        print(f"p={e.p}  gamma={e.gamma:.6f}+-{e.gamma_se:.6f}  "
              f"delta={e.delta:.6f}+-{e.delta_se:.6f}")
    return EXIT_DEGRADED if _degraded(records) else EXIT_OK


def cmd_gaps(cfg, args) -> int:
    spec = cfg.ensemble_spec()
    out = _resolve(cfg, args)
    records, max_p, schedule = _run_batch(cfg, spec, args)
    p_list = list(range(1, max_p + 1))
    r_list = list(cfg.run["r_list"])
    thresholds = {(p, r): GAP_THRESHOLDS.get((spec.label(), p, r))
                  for p in p_list for r in r_list}
    thresholds = {k: v for k, v in thresholds.items() if v is not None}
    extra = {"run.checkpoints": ",".join(str(n) for n in schedule)}
    for (p, r), v in sorted(thresholds.items()):
        extra[f"threshold.gap.p{p}.r{r:g}"] = repr(v)
    manifest = _manifest_items(cfg, "gaps", spec, extra)
    _write_records(out, records, manifest, cfg)
    if "csv" in cfg.output["formats"]:
        report.write_gaps_csv(out / "gaps.csv", records, p_list, r_list)
        report.write_gaps_summary_csv(out / "gaps_summary.csv", records,
                                      p_list, r_list, thresholds=thresholds)
    if "png" in cfg.output["formats"]:
        report.figure_gaps(out / "gaps.png", records, p_list, r_list)
    report.write_manifest(out / "manifest.txt", manifest)
    print(f"gap statistics over {len(records)} trajectories written to {out}")
    return EXIT_DEGRADED if _degraded(records) else EXIT_OK


def cmd_align(cfg, args) -> int:
    spec = cfg.ensemble_spec()
    out = _resolve(cfg, args)
    records, max_p, schedule = _run_batch(cfg, spec, args)
    r_list = list(cfg.run["r_list"])
    extra = {"run.checkpoints": ",".join(str(n) for n in schedule)}
    for (label, probe, r), v in sorted(ALIGN_THRESHOLDS.items()):
        if label == spec.label() and r in r_list:
            extra[f"threshold.align.{probe}.r{r:g}"] = repr(v)
    manifest = _manifest_items(cfg, "align", spec, extra)
    _write_records(out, records, manifest, cfg)
    if "csv" in cfg.output["formats"]:
        report.write_align_csv(out / "align.csv", records, r_list)
    if "png" in cfg.output["formats"]:
        report.figure_align(out / "align.png", records, r_list[0])
    report.write_manifest(out / "manifest.txt", manifest)
    print(f"alignment statistics over {len(records)} trajectories "
          f"written to {out}")
    return EXIT_DEGRADED if _degraded(records) else EXIT_OK


def cmd_clt(cfg, args) -> int:
    spec = cfg.ensemble_spec()
    out = _resolve(cfg, args)
    records, max_p, schedule = _run_batch(cfg, spec, args)
    run = cfg.run
    pilot_seed = run["master_seed"] + PILOT_SEED_OFFSET
    log.info("centering pilot: %d trajectories", run["pilot_trajectories"])
    pilot = run_many(spec, n_max=run["n_max"], max_p=max_p,
                     count=run["pilot_trajectories"], master_seed=pilot_seed,
                     stride=run["checkpoint_stride"], workers=args.workers)
    center = exponent_estimates(pilot, 1).gamma
    match = clt_match(records, gamma1_center=center)
    critical = 1.63 * math.sqrt(2.0 / match.sample_count)
    manifest = _manifest_items(cfg, "clt", spec, {
        "run.checkpoints": ",".join(str(n) for n in schedule),
        "clt.center_gamma1": repr(center),
        "clt.pilot_seed": str(pilot_seed),
        "clt.critical_1pct": repr(critical),
    })
    _write_records(out, records, manifest, cfg)
    if "csv" in cfg.output["formats"]:
        report.write_clt_csv(out / "clt.csv", match, center, critical,
                             run["pilot_trajectories"])
    if "png" in cfg.output["formats"]:
        report.figure_clt(out / "clt.png", records, center)
    report.write_manifest(out / "manifest.txt", manifest)
    verdict = "below" if match.ks <= critical else "ABOVE"
    print(f"ks={match.ks:.4f} ({verdict} the 1% critical value "
          f"{critical:.4f}, N={match.sample_count})")
    return EXIT_DEGRADED if _degraded(records + pilot) else EXIT_OK


def cmd_measure(cfg, args) -> int:
    spec = cfg.ensemble_spec()
    out = _resolve(cfg, args)
    run = cfg.run
    try:
        nu = estimate_invariant_measure(
            spec, burn_in=run["burn_in"], count=run["measure_count"],
            master_seed=run["master_seed"])
    except ValueError as exc:
        print(f"condition failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    gamma_pair = furstenberg_gamma1(spec, nu, samples=run["integral_samples"],
                                    master_seed=run["master_seed"])
    a_est = estimate_A(spec, alpha=run["alpha"], n=run["contraction_n"],
                       pair_count=run["pair_count"],
                       master_seed=run["master_seed"],
                       samples=run["contraction_samples"])
    b_est = estimate_B(nu, beta=run["beta"], probe_count=run["probe_count"],
                       master_seed=run["master_seed"])
    manifest = _manifest_items(cfg, "measure", spec, {
        "measure.atoms": str(nu.count),
        "measure.caveat": a_est.caveat,
    })
    if "csv" in cfg.output["formats"]:
        save_atoms_csv(nu, out / "atoms.csv")
        report.write_measure_csv(out / "measure.csv", a_est, b_est, gamma_pair)
    if "png" in cfg.output["formats"]:
        report.figure_measure(out / "measure.png", nu.atoms)
    report.write_manifest(out / "manifest.txt", manifest)
    print(f"gamma1 integral = {gamma_pair[0]:.6f} +- {gamma_pair[1]:.6f}; "
          f"A({run['alpha']:g}) = {a_est.value:.6f}; "
          f"B({run['beta']:g}) = {b_est.value:.6f} ({a_est.caveat})")
    return EXIT_OK


_COMMANDS = {
    "check": cmd_check,
    "spectrum": cmd_spectrum,
    "gaps": cmd_gaps,
    "align": cmd_align,
    "clt": cmd_clt,
    "measure": cmd_measure,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("LYAP_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EngineError as exc:
        print(f"numerical trust degraded: {exc}", file=sys.stderr)
        return EXIT_DEGRADED


def entry() -> None:
    sys.exit(main())
