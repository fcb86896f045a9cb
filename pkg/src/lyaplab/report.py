"""Delimited summaries and figures for the CLI commands.

Everything written here is byte-deterministic given the same records:
floats are emitted with ``repr`` (shortest round-trip form), rows are
sorted, and figures carry fixed metadata so PNG bytes do not depend on
the library version string or the clock.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import clt_samples, gap_statistic, gap_summary

__all__ = [
    "write_manifest",
    "write_spectrum_csv",
    "write_gaps_csv",
    "write_gaps_summary_csv",
    "write_align_csv",
    "write_clt_csv",
    "write_measure_csv",
    "figure_spectrum",
    "figure_gaps",
    "figure_align",
    "figure_clt",
    "figure_measure",
]

_PNG_KW = dict(dpi=110, metadata={"Software": "lyaplab"})


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_rows(path, header, rows, preamble=()) -> None:
    lines = list(preamble) + [",".join(header)]
    lines += [",".join(_cell(x) for x in row) for row in rows]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(path, items: dict) -> None:
    """Sorted ``key=value`` lines; the reproduction contract of a run."""
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(items):
            fh.write(f"{key}={items[key]}\n")


# -- CSV tables -----------------------------------------------------------


def write_spectrum_csv(path, estimates) -> None:
    rows = [(e.p, float(e.gamma), float(e.gamma_se), float(e.delta),
             float(e.delta_se), e.trajectories) for e in estimates]
    _write_rows(path, ("p", "gamma", "gamma_se", "delta", "delta_se",
                       "trajectories"), rows)


def _abs_gap_table(records, p, r):
    """(ns, |values| array of shape (records, checkpoints))."""
    series = [gap_statistic(rec, p, r) for rec in records]
    ns = [n for n, _ in series[0]]
    values = np.abs(np.array([[v for _, v in s] for s in series]))
    return ns, values


def write_gaps_csv(path, records, p_list, r_list) -> None:
    """One row per (p, r, n): quantiles of |gap statistic| across records."""
    rows = []
    for p in p_list:
        for r in r_list:
            ns, values = _abs_gap_table(records, p, r)
            for j, n in enumerate(ns):
                col = values[:, j]
                rows.append((p, float(r), n,
                             float(np.quantile(col, 0.25)),
                             float(np.median(col)),
                             float(np.quantile(col, 0.75)),
                             float(np.quantile(col, 0.975)),
                             float(col.max())))
    _write_rows(path, ("p", "r", "n", "q25_abs", "median_abs", "q75_abs",
                       "q975_abs", "max_abs"), rows)


def write_gaps_summary_csv(path, records, p_list, r_list,
                           thresholds=None) -> None:
    """Terminal medians and decay slopes, with pilot thresholds when known."""
    rows = []
    for p in p_list:
        for r in r_list:
            s = gap_summary(records, p, r)
            thr = None if thresholds is None else thresholds.get((p, r))
            rows.append((p, float(r), s.quantiles[1], s.quantiles[3],
                         s.decay_slope, thr,
                         "" if thr is None else str(s.quantiles[1] <= thr)))
    _write_rows(path, ("p", "r", "terminal_median_abs", "terminal_q975_abs",
                       "decay_slope", "pilot_threshold", "below_threshold"),
                rows)


def _align_cells(records, r):
    """{(n, label): list of |v-statistic| or None} plus u analogues."""
    from .experiments import alignment_statistic

    table = {}
    for rec in records:
        for n, lab, lv, lu in alignment_statistic(rec, r):
            table.setdefault((n, lab), []).append((lv, lu))
    return table


def write_align_csv(path, records, r_list) -> None:
    """One row per (r, n, probe): resolution counts and |statistic| quantiles."""
    rows = []
    for r in r_list:
        table = _align_cells(records, r)
        for (n, lab) in sorted(table, key=lambda k: (k[0], k[1])):
            pairs = table[(n, lab)]
            v_resolved = [abs(lv) for lv, _ in pairs
                          if lv is not None and math.isfinite(lv)]
            infinite = sum(1 for lv, _ in pairs
                           if lv is not None and math.isinf(lv))
            unresolved = sum(1 for lv, _ in pairs if lv is None)
            med = q975 = None
            if v_resolved:
                med = float(np.median(v_resolved))
                q975 = float(np.quantile(v_resolved, 0.975))
            rows.append((float(r), n, lab, len(pairs), unresolved, infinite,
                         med, q975))
    _write_rows(path, ("r", "n", "probe", "count", "unresolved", "orthogonal",
                       "median_abs_v", "q975_abs_v"), rows)


def write_clt_csv(path, match, center, critical, pilot_trajectories) -> None:
    rows = [(float(match.ks), match.sample_count, match.terminal_n,
             float(critical), str(match.ks <= critical), float(center),
             pilot_trajectories)]
    _write_rows(path, ("ks_distance", "sample_count", "terminal_n",
                       "critical_1pct", "below_critical", "center_gamma1",
                       "pilot_trajectories"), rows)


def write_measure_csv(path, a_est, b_est, gamma_pair) -> None:
    """Contraction and integrability estimates plus the integral exponent.

    Both sup-type quantities carry their caveat in a comment line: a
    finite family of pairs or probes can only bound a supremum from
    below.
    """
    preamble = (
        f"# contraction_coefficient and integrability_constant: {a_est.caveat}",
    )
    rows = [
        ("contraction_coefficient", float(a_est.value), float(a_est.alpha),
         a_est.n, a_est.pair_count * a_est.samples),
        ("integrability_constant", float(b_est.value), float(b_est.beta),
         "", len(b_est.probe_values)),
        ("gamma1_integral", float(gamma_pair[0]), "", "", ""),
        ("gamma1_integral_se", float(gamma_pair[1]), "", "", ""),
    ]
    _write_rows(path, ("quantity", "value", "exponent", "n", "evaluations"),
                rows, preamble=preamble)


# -- figures --------------------------------------------------------------


def figure_spectrum(path, estimates) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ps = [e.p for e in estimates]
    ax.errorbar(ps, [e.gamma for e in estimates],
                yerr=[e.gamma_se for e in estimates], fmt="o-",
                capsize=3, label="singular route (gamma)")
    ax.errorbar(ps, [e.delta for e in estimates],
                yerr=[e.delta_se for e in estimates], fmt="s--",
                capsize=3, label="eigenvalue route (delta)")
    ax.set_xlabel("p")
    ax.set_ylabel("terminal (1/n) log value")
    ax.set_xticks(ps)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)


def figure_gaps(path, records, p_list, r_list) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for p in p_list:
        for r in r_list:
            ns, values = _abs_gap_table(records, p, r)
            med = np.median(values, axis=0)
            if np.all(med == 0.0):
                continue
            ax.loglog(ns, np.where(med > 0, med, np.nan), "o-",
                      label=f"p={p}, r={r:g}")
    ax.set_xlabel("n")
    ax.set_ylabel("median |gap statistic|")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)


def figure_align(path, records, r) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    table = _align_cells(records, r)
    labels = sorted({lab for _, lab in table})
    for lab in labels:
        ns = sorted(n for n, l in table if l == lab)
        meds = []
        for n in ns:
            finite = [abs(lv) for lv, _ in table[(n, lab)]
                      if lv is not None and math.isfinite(lv)]
            meds.append(np.median(finite) if finite else np.nan)
        ax.semilogy(ns, meds, "o-", label=f"probe {lab}")
    ax.set_xlabel("n")
    ax.set_ylabel(f"median |alignment statistic|, r={r:g}")
    if labels:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)


def figure_clt(path, records, center) -> None:
    sig, eig = clt_samples(records, center)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    lo = float(min(sig.min(), eig.min()))
    hi = float(max(sig.max(), eig.max()))
    bins = np.linspace(lo, hi, 30)
    ax.hist(sig, bins=bins, alpha=0.55, label="singular route")
    ax.hist(eig, bins=bins, alpha=0.55, label="eigenvalue route")
    ax.set_xlabel("sqrt(n) fluctuation about the pilot exponent")
    ax.set_ylabel("trajectories")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)


def figure_measure(path, atoms) -> None:
    atoms = np.asarray(atoms)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    if atoms.shape[1] == 2:
        angles = np.mod(np.arctan2(atoms[:, 1], atoms[:, 0]), math.pi)
        ax.hist(angles, bins=40)
        ax.set_xlabel("direction angle mod pi")
    else:
        ax.hist(atoms[:, 0] ** 2, bins=40)
        ax.set_xlabel("squared first coordinate of the direction")
    ax.set_ylabel("atoms")
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)
