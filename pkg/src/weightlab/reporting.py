"""Turn a directory of run artifacts into report tables.

The scanner classifies files by their pinned headers/keys, never by filename,
so artifacts can be collected from many runs into one directory. All inputs
must share one schema version; a mix raises ReportInputError naming the
offenders rather than silently blending incompatible columns.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION
from .difficulty import PROFILE_HEADER
from .errors import ReportInputError
from .optimizer import TRACE_HEADER
from .propcheck import SUMMARY_HEADER
from .serialization import fmt_float, read_csv, read_json, write_csv, write_json

HIST_BINS = 20


@dataclass
class _Inputs:
    profiles: list[tuple[str, dict[str, np.ndarray]]] = field(default_factory=list)
    traces: list[tuple[str, list[list[str]]]] = field(default_factory=list)
    bounds: list[tuple[str, dict]] = field(default_factory=list)
    verdicts: list[tuple[str, dict]] = field(default_factory=list)
    versions: dict[str, int] = field(default_factory=dict)
    counted: dict[str, int] = field(default_factory=dict)

    def note(self, kind: str) -> None:
        self.counted[kind] = self.counted.get(kind, 0) + 1

    @property
    def empty(self) -> bool:
        return not self.versions


def _profile_columns(rows: list[list[str]]) -> dict[str, np.ndarray]:
    cols = {name: np.array([float(r[j]) for r in rows]) for j, name in enumerate(PROFILE_HEADER)}
    cols["noise_flag"] = cols["noise_flag"].astype(bool)
    cols["class"] = cols["class"].astype(np.int64)
    return cols


def _is_dataset_header(header: list[str]) -> bool:
    return (
        len(header) >= 4
        and header[0] == "f0"
        and header[-3:] == ["label", "noise_flag", "class"]
    )


def _scan_csv(path: Path, rel: str, found: _Inputs) -> None:
    try:
        header, rows, version = read_csv(path)
    except (ValueError, UnicodeDecodeError):
        return  # not one of ours
    if header == PROFILE_HEADER:
        found.profiles.append((rel, _profile_columns(rows)))
        found.note("profiles")
    elif header == TRACE_HEADER:
        found.traces.append((rel, rows))
        found.note("traces")
    elif header == SUMMARY_HEADER:
        found.note("check_summaries")
    elif _is_dataset_header(header):
        found.note("datasets")
    else:
        return
    found.versions[rel] = version


def _scan_json(path: Path, rel: str, found: _Inputs) -> None:
    try:
        obj = read_json(path)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return
    if not isinstance(obj, dict) or "schema_version" not in obj:
        return
    if "log_convention" in obj:
        found.bounds.append((rel, obj))
        found.note("bounds")
    elif "artifacts" in obj:
        found.note("manifests")
    elif "theta" in obj:
        found.note("checkpoints")
    elif "gamma_star" in obj and "direction" in obj:
        found.note("maxmargin")
    else:
        return  # report summaries and strangers are not inputs
    found.versions[rel] = int(obj["schema_version"])


def _scan_jsonl(path: Path, rel: str, found: _Inputs) -> None:
    docs = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    docs.append(json.loads(line))
    except (json.JSONDecodeError, UnicodeDecodeError):
        return
    if not docs or not all(isinstance(d, dict) and "check_id" in d for d in docs):
        return
    for d in docs:
        found.verdicts.append((rel, d))
    found.note("verdict_files")
    found.versions[rel] = int(docs[0].get("schema_version", SCHEMA_VERSION))


def scan_inputs(inputs_dir: str | Path) -> _Inputs:
    found = _Inputs()
    root = Path(inputs_dir)
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        rel = os.path.relpath(path, root)
        if path.suffix == ".csv":
            _scan_csv(path, rel, found)
        elif path.suffix == ".json":
            _scan_json(path, rel, found)
        elif path.suffix == ".jsonl":
            _scan_jsonl(path, rel, found)
    distinct = sorted(set(found.versions.values()))
    if len(distinct) > 1:
        lines = [f"  {rel}: schema_version={v}" for rel, v in sorted(found.versions.items())]
        raise ReportInputError(
            "inputs mix schema versions " + str(distinct) + ":\n" + "\n".join(lines)
        )
    return found


# ---------------------------------------------------------------------------
# Table builders
# ---------------------------------------------------------------------------


def _hist_by_noise(profiles) -> tuple[list[str], list[list[str]]]:
    err = np.concatenate([cols["err"] for _, cols in profiles])
    flag = np.concatenate([cols["noise_flag"] for _, cols in profiles])
    lo, hi = float(err.min()), float(err.max())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, HIST_BINS + 1)
    clean, _ = np.histogram(err[~flag], bins=edges)
    noisy, _ = np.histogram(err[flag], bins=edges)
    rows = [
        [fmt_float(edges[b]), fmt_float(edges[b + 1]), str(int(clean[b])), str(int(noisy[b]))]
        for b in range(HIST_BINS)
    ]
    return ["bin_low", "bin_high", "count_clean", "count_noisy"], rows


def _error_by_class(profiles) -> tuple[list[str], list[list[str]]]:
    err = np.concatenate([cols["err"] for _, cols in profiles])
    cls = np.concatenate([cols["class"] for _, cols in profiles])
    rows = []
    for c in np.unique(cls):
        sel = cls == c
        spread = float(err[sel].std(ddof=1)) if sel.sum() > 1 else 0.0
        rows.append([str(int(c)), str(int(sel.sum())),
                     fmt_float(float(err[sel].mean())), fmt_float(spread)])
    return ["class", "count", "err_mean", "err_std"], rows


def _scatter_table(profiles) -> tuple[list[str], list[list[str]]]:
    header = ["source", "idx", "mu_hat", "sigma2_hat", "err", "uncertainty"]
    rows = []
    for rel, cols in profiles:
        for i in range(len(cols["idx"])):
            rows.append([
                rel, str(int(cols["idx"][i])),
                fmt_float(cols["mu_hat"][i]), fmt_float(cols["sigma2_hat"][i]),
                fmt_float(cols["err"][i]), fmt_float(cols["uncertainty"][i]),
            ])
    return header, rows


def _curves_table(traces) -> tuple[list[str], list[list[str]]]:
    header = ["source"] + TRACE_HEADER
    rows = [[rel] + row for rel, trace_rows in traces for row in trace_rows]
    return header, rows


def _bounds_table(bounds) -> tuple[list[str], list[list[str]]]:
    keys = ["gamma", "delta", "q", "L", "n", "convention", "D", "I", "II", "III", "total", "empirical"]
    header = ["source"] + keys
    rows = []
    for rel, obj in bounds:
        row = [rel]
        for k in keys:
            v = obj.get(k)
            row.append(fmt_float(v) if isinstance(v, float) else str(v))
        rows.append(row)
    return header, rows


def _checks_table(verdicts) -> tuple[list[str], list[list[str]]]:
    header = ["check_id", "outcome", "headline", "headline_statistic"]
    rows = []
    for _, doc in verdicts:
        head = doc.get("headline", "")
        stat = doc.get("statistics", {}).get(head, float("nan"))
        rows.append([doc["check_id"], doc["outcome"], head, fmt_float(float(stat))])
    return header, rows


def _scheme_margins(verdicts) -> tuple[list[str], list[list[str]]]:
    header = ["source", "scheme", "gamma_first", "gamma_final", "gamma_star"]
    rows = []
    for rel, doc in verdicts:
        if doc["check_id"] != "margin_convergence":
            continue
        stats = doc.get("statistics", {})
        star = stats.get("gamma_star", float("nan"))
        schemes = sorted(
            k[len("gamma_final_"):] for k in stats if k.startswith("gamma_final_")
        )
        for s in schemes:
            rows.append([
                rel, s,
                fmt_float(float(stats.get(f"gamma_first_{s}", float("nan")))),
                fmt_float(float(stats[f"gamma_final_{s}"])),
                fmt_float(float(star)),
            ])
    return header, rows


def _recall_table(verdicts) -> tuple[list[str], list[list[str]]]:
    keys = ["recall_equal_mean", "recall_balanced_mean", "recall_improved_count", "train_seeds"]
    header = ["source"] + keys
    rows = []
    for rel, doc in verdicts:
        if doc["check_id"] != "imbalance":
            continue
        stats = doc.get("statistics", {})
        rows.append([rel] + [fmt_float(float(stats.get(k, float("nan")))) for k in keys])
    return header, rows


def generate_report(inputs_dir: str | Path, out_dir: str | Path) -> list[str]:
    """Write every table the inputs support plus summary.json; returns paths."""
    found = scan_inputs(inputs_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    def emit(name: str, header: list[str], rows: list[list[str]]) -> None:
        if not rows:
            return
        path = out / name
        write_csv(path, header, rows)
        written.append(str(path))

    if found.profiles:
        emit("error_hist_by_noise.csv", *_hist_by_noise(found.profiles))
        emit("error_by_class.csv", *_error_by_class(found.profiles))
        emit("margin_vs_error.csv", *_scatter_table(found.profiles))
    if found.traces:
        emit("training_curves.csv", *_curves_table(found.traces))
    if found.bounds:
        emit("bounds_table.csv", *_bounds_table(found.bounds))
    if found.verdicts:
        emit("checks_table.csv", *_checks_table(found.verdicts))
        emit("scheme_margins.csv", *_scheme_margins(found.verdicts))
        emit("recall_table.csv", *_recall_table(found.verdicts))

    checks = {
        doc["check_id"]: {
            "outcome": doc["outcome"],
            "headline": doc.get("headline", ""),
            "statistics": doc.get("statistics", {}),
        }
        for _, doc in found.verdicts
    }
    summary = {
        "schema_version": SCHEMA_VERSION,
        "no_inputs": found.empty,
        "input_counts": dict(sorted(found.counted.items())),
        "checks": checks,
        "tables": [os.path.basename(p) for p in written],
    }
    summary_path = out / "summary.json"
    write_json(summary_path, summary)
    written.append(str(summary_path))
    return written
