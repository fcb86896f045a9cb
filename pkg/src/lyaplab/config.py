"""Strict key=value run configuration.

The format is deliberately small: ``[section]`` headers, ``key = value``
pairs, ``#`` comments.  Unknown sections, unknown keys, duplicates, and
type errors are all hard failures with line numbers, because a config
that silently ignores a typo is a corrupted experiment.

Sections and keys:

* ``[ensemble]``: kind (iid_entries | isotropic_gaussian | fixed_set |
  deterministic), dim, family (uniform | gaussian | two_point), a, b,
  mean, sd, prob, matrix (deterministic), matrix_1..matrix_K with
  prob_1..prob_K (fixed_set), isotropic (fixed_set tag).
  Matrices are written row by row: ``matrix = 2 0; 0 1``.
* ``[run]``: n_max, trajectories, master_seed, max_p,
  checkpoint_stride, r_list, tau, burn_in, measure_count,
  integral_samples, alpha, beta, pair_count, probe_count,
  contraction_n, contraction_samples, pilot_trajectories.
* ``[output]``: directory, formats (subset of csv,jsonl,png).

Only the keys a command actually uses are required; the rest carry the
defaults listed in ``RUN_DEFAULTS``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleSpec, ScalarDistribution

__all__ = ["ConfigError", "RunConfig", "parse_config", "RUN_DEFAULTS"]


class ConfigError(Exception):
    """Malformed or incomplete configuration; message carries location."""


_ENSEMBLE_KEYS = {
    "kind", "dim", "family", "a", "b", "mean", "sd", "prob", "matrix",
    "isotropic",
}
_RUN_KEYS = {
    "n_max", "trajectories", "master_seed", "max_p", "checkpoint_stride",
    "r_list", "tau", "burn_in", "measure_count", "integral_samples",
    "alpha", "beta", "pair_count", "probe_count", "contraction_n",
    "contraction_samples", "pilot_trajectories",
}
_OUTPUT_KEYS = {"directory", "formats"}

RUN_DEFAULTS = {
    "master_seed": 0,
    "max_p": None,          # resolved to the ensemble dimension
    "checkpoint_stride": None,
    "r_list": (0.25, 0.5, 1.0),
    "tau": 0.5,
    "burn_in": None,
    "measure_count": 10000,
    "integral_samples": 50000,
    "alpha": 0.5,
    "beta": 0.5,
    "pair_count": 40,
    "probe_count": 64,
    "contraction_n": 20,
    "contraction_samples": 200,
    "pilot_trajectories": 30,
}

OUTPUT_DEFAULTS = {"directory": "out", "formats": ("csv", "jsonl", "png")}


def _parse_matrix(text: str, where: str) -> np.ndarray:
    try:
        rows = [[float(x) for x in row.replace(",", " ").split()]
                for row in text.split(";")]
    except ValueError as exc:
        raise ConfigError(f"{where}: bad matrix entry: {exc}") from exc
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ConfigError(f"{where}: matrix must be square, "
                          f"rows of {[len(r) for r in rows]} entries")
    return np.array(rows)


def _read_pairs(path):
    """Yield (line_number, section, key, value) with syntax checking."""
    section = None
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in ("ensemble", "run", "output"):
                    raise ConfigError(
                        f"{path}: line {lineno}: unknown section [{section}]")
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}: line {lineno}: expected key = value, got {line!r}")
            if section is None:
                raise ConfigError(
                    f"{path}: line {lineno}: key before any [section] header")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            allowed = {"ensemble": _ENSEMBLE_KEYS, "run": _RUN_KEYS,
                       "output": _OUTPUT_KEYS}[section]
            base = key.split("_")[0] if section == "ensemble" else key
            if key not in allowed and not (
                    section == "ensemble" and base in ("matrix", "prob")
                    and key.rpartition("_")[2].isdigit()):
                raise ConfigError(
                    f"{path}: line {lineno}: unknown key {key!r} in "
                    f"[{section}]")
            if (section, key) in seen:
                raise ConfigError(
                    f"{path}: line {lineno}: duplicate key {key!r} in "
                    f"[{section}]")
            seen.add((section, key))
            yield lineno, section, key, value


def _to_int(value, where):
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected an integer, got {value!r}") from exc


def _to_float(value, where):
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected a number, got {value!r}") from exc


def _to_bool(value, where):
    v = value.strip().lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"{where}: expected true/false, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: the ensemble plus run and output settings."""

    path: str
    ensemble: dict
    run: dict
    output: dict

    def require(self, *keys) -> None:
        """Fail with the config path if any of these run keys is unset."""
        missing = [k for k in keys if self.run.get(k) is None]
        if missing:
            raise ConfigError(
                f"{self.path}: [run] is missing required keys: "
                + ", ".join(sorted(missing)))

    def ensemble_spec(self) -> EnsembleSpec:
        """Build the ensemble the config describes."""
        e = dict(self.ensemble)
        where = f"{self.path}: [ensemble]"
        kind = e.get("kind")
        if kind is None:
            raise ConfigError(f"{where}: missing required key 'kind'")
        try:
            if kind == "iid_entries":
                return EnsembleSpec.iid_entries(
                    self._distribution(e), self._require_int(e, "dim"))
            if kind == "isotropic_gaussian":
                return EnsembleSpec.isotropic_gaussian(
                    self._require_int(e, "dim"), float(e.get("sd", 1.0)))
            if kind == "deterministic":
                if "matrix" not in e:
                    raise ConfigError(f"{where}: missing required key 'matrix'")
                return EnsembleSpec.deterministic(
                    _parse_matrix(e["matrix"], where))
            if kind == "fixed_set":
                mats, probs = self._matrix_list(e, where)
                return EnsembleSpec.fixed_set(
                    mats, probs, isotropic_tag=bool(e.get("isotropic", False)))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        raise ConfigError(f"{where}: unknown ensemble kind {kind!r}")

    def _require_int(self, e, key):
        if key not in e:
            raise ConfigError(
                f"{self.path}: [ensemble]: missing required key {key!r}")
        return int(e[key])

    def _distribution(self, e) -> ScalarDistribution:
        where = f"{self.path}: [ensemble]"
        family = e.get("family")
        if family == "uniform":
            return ScalarDistribution.uniform(float(e.get("a", 0.0)),
                                              float(e.get("b", 1.0)))
        if family == "gaussian":
            return ScalarDistribution.gaussian(float(e.get("mean", 0.0)),
                                               float(e.get("sd", 1.0)))
        if family == "two_point":
            return ScalarDistribution.two_point(float(e.get("prob", 0.5)))
        raise ConfigError(f"{where}: iid_entries needs family = uniform | "
                          f"gaussian | two_point, got {family!r}")

    def _matrix_list(self, e, where):
        mats, probs = [], []
        k = 1
        while f"matrix_{k}" in e:
            mats.append(_parse_matrix(e[f"matrix_{k}"], f"{where} matrix_{k}"))
            probs.append(float(e.get(f"prob_{k}", 1.0)))
            k += 1
        if not mats:
            raise ConfigError(
                f"{where}: fixed_set needs matrix_1, matrix_2, ...")
        total = sum(probs)
        return mats, [p / total for p in probs]

    def items(self):
        """Sorted ``section.key=value`` strings for the manifest."""
        rows = []
        for section, data in (("ensemble", self.ensemble),
                              ("run", self.run), ("output", self.output)):
            for key, value in data.items():
                if value is None:
                    continue
                if isinstance(value, (tuple, list)):
                    value = ",".join(str(v) for v in value)
                rows.append(f"{section}.{key}={value}")
        return sorted(rows)


def parse_config(path) -> RunConfig:
    """Parse and type-check the file at ``path``."""
    ensemble: dict = {}
    run = dict(RUN_DEFAULTS)
    output = dict(OUTPUT_DEFAULTS)
    for lineno, section, key, value in _read_pairs(path):
        where = f"{path}: line {lineno}: [{section}] {key}"
        if section == "ensemble":
            if key == "dim":
                ensemble[key] = _to_int(value, where)
            elif key == "isotropic":
                ensemble[key] = _to_bool(value, where)
            elif key in ("a", "b", "mean", "sd", "prob") or key.startswith("prob_"):
                ensemble[key] = _to_float(value, where)
            else:
                ensemble[key] = value
        elif section == "run":
            if key in ("tau", "alpha", "beta"):
                run[key] = _to_float(value, where)
            elif key == "r_list":
                try:
                    run[key] = tuple(float(x) for x in value.split(","))
                except ValueError as exc:
                    raise ConfigError(
                        f"{where}: expected comma-separated numbers") from exc
                if any(r <= 0 for r in run[key]):
                    raise ConfigError(f"{where}: every r must be positive")
            else:
                run[key] = _to_int(value, where)
        else:
            if key == "formats":
                formats = tuple(f.strip() for f in value.split(",") if f.strip())
                bad = [f for f in formats if f not in ("csv", "jsonl", "png")]
                if bad:
                    raise ConfigError(
                        f"{where}: unknown formats {bad}; allowed: csv, jsonl, png")
                output[key] = formats
            else:
                output[key] = value
    cfg = RunConfig(path=str(path), ensemble=ensemble, run=run, output=output)
    cfg.ensemble_spec()  # fail early on ensemble problems
    return cfg
