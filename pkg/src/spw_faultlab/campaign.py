"""Config-driven fault-injection campaigns and their result files.

A campaign file is JSON (schema shipped with the package, unknown keys
rejected): a model path, a dataset fixture, and a list of cells, each one
(p, protection mode, target, limit, rand variant, accuracy mode, chained
flag, iterations, seed).  Running a campaign writes, under the output
directory:

* one CSV per cell with the raw per-trial records
* campaign.json, the fully resolved spec (the rerun/summarize anchor)
* summary.csv with the five-number summary and saturation flag per cell
* report.txt with overhead, policy, and parameter-statistics notes
* box_*.png, one boxplot figure per mode/target group

The same (campaign file, model, dataset) triple always reproduces
byte-identical cell and summary CSVs, regardless of worker count: every
cell's randomness comes only from its own seed.
"""

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import figures, model_io, nn_engine
from .fault_injector import ChainConfig, FaultConfig, iid_campaign, metropolis_chain
from .protected_store import ProtectionMode, storage_overhead

CELL_CSV_COLUMNS = ("trial", "accuracy", "accepted_flag", "flips_injected",
                    "singles_corrected", "doubles_masked_or_passed")
SUMMARY_COLUMNS = ("name", "mode", "target", "p", "limit", "rand_variant",
                   "accuracy_mode", "chained", "iterations", "seed",
                   "min", "q1", "median", "q3", "max", "saturated")
PAPER_SCALE_ITERATIONS = 100
DEFAULT_EPSILON = 0.03

GRID_P_VALUES = (0.1, 0.01, 0.001, 0.0001)
GRID_MODES = ("none", "ecc", "spw")
GRID_TARGETS = ("all", "conv", "fc")
GRID_LIMITS = (None, 2)

_CELL_DEFAULTS = {
    "target": "all", "limit": None, "bit_scope": None,
    "rand_variant": "standard", "accuracy_mode": "truth", "chained": True,
}


def _schema():
    text = resources.files("spw_faultlab").joinpath(
        "campaign.schema.json").read_text()
    return json.loads(text)


def cell_name(cell):
    limit = "none" if cell["limit"] is None else str(cell["limit"])
    name = f"{cell['mode']}-{cell['target']}-p{cell['p']:g}-limit{limit}"
    if not cell["chained"]:
        name += "-iid"
    return name


def load_spec(path):
    """Parse, schema-validate, and resolve a campaign file.

    Relative paths are taken against the campaign file's directory; cells
    get defaults, derived names, and a uniqueness check on names and seeds.
    """
    path = Path(path)
    with open(path) as f:
        doc = json.load(f)
    return resolve_doc(doc, path.parent)


def resolve_doc(doc, base):
    """Validate a campaign document and resolve paths against base."""
    try:
        jsonschema.Draft202012Validator(_schema()).validate(doc)
    except jsonschema.ValidationError as e:
        raise ValueError(f"campaign file invalid: {e.message}") from e
    base = Path(base)

    def resolve(p):
        return str((base / p).resolve())

    def resolve_dataset(d):
        out = {"images": resolve(d["images"]), "labels": resolve(d["labels"])}
        if "manifest" in d:
            out["manifest"] = resolve(d["manifest"])
        return out

    spec = {
        "model": resolve(doc["model"]),
        "dataset": resolve_dataset(doc["dataset"]),
        "output_dir": resolve(doc["output_dir"]) if "output_dir" in doc else None,
        "workers": doc.get("workers", 1),
        "cells": [],
    }
    names = set()
    seeds = set()
    for raw in doc["cells"]:
        cell = dict(_CELL_DEFAULTS)
        cell.update(raw)
        cell["dataset"] = (resolve_dataset(raw["dataset"])
                           if "dataset" in raw else spec["dataset"])
        cell.setdefault("name", cell_name(cell))
        FaultConfig(p=cell["p"], limit=cell["limit"], target=cell["target"],
                    bit_scope=cell["bit_scope"],
                    rand_variant=cell["rand_variant"], seed=cell["seed"])
        if cell["name"] in names:
            raise ValueError(
                f"duplicate cell name {cell['name']!r}; name cells explicitly")
        names.add(cell["name"])
        if cell["seed"] in seeds and not doc.get("allow_shared_seeds", False):
            raise ValueError(
                f"seed {cell['seed']} used by more than one cell; set "
                f"allow_shared_seeds to share seeds deliberately")
        seeds.add(cell["seed"])
        spec["cells"].append(cell)
    return spec


def make_grid(model, images, labels, manifest=None, p_values=GRID_P_VALUES,
              modes=GRID_MODES, targets=GRID_TARGETS, limits=GRID_LIMITS,
              iterations=30, seed_base=20260822, chained=True):
    """The full table grid as a campaign document (72 cells by default)."""
    dataset = {"images": images, "labels": labels}
    if manifest is not None:
        dataset["manifest"] = manifest
    cells = []
    for mode in modes:
        for target in targets:
            for limit in limits:
                for p in p_values:
                    cells.append({
                        "p": p, "mode": mode, "target": target, "limit": limit,
                        "iterations": iterations,
                        "seed": seed_base + len(cells), "chained": chained,
                    })
    return {"model": model, "dataset": dataset, "cells": cells}


# ------------------------------------------------------------------ running

@dataclass(frozen=True)
class CellResult:
    cell: dict
    dist: object          # AccuracyDistribution
    duration: float


def _load_assets(spec):
    models = {}
    datasets = {}
    models[spec["model"]] = model_io.read_model(spec["model"])
    for cell in spec["cells"]:
        key = tuple(sorted(cell["dataset"].items()))
        if key not in datasets:
            d = cell["dataset"]
            datasets[key] = model_io.load_dataset(
                d["images"], d["labels"], d.get("manifest"))
    return models, datasets


def _run_cell(cell, model, dataset):
    fcfg = FaultConfig(p=cell["p"], limit=cell["limit"], target=cell["target"],
                       bit_scope=cell["bit_scope"],
                       rand_variant=cell["rand_variant"], seed=cell["seed"])
    ccfg = ChainConfig(iterations=cell["iterations"], dataset=dataset,
                       accuracy_mode=cell["accuracy_mode"],
                       protection=ProtectionMode(cell["mode"]))
    runner = metropolis_chain if cell["chained"] else iid_campaign
    start = time.perf_counter()
    dist = runner(model, fcfg, ccfg)
    return CellResult(cell, dist, time.perf_counter() - start)


def run_campaign(spec, out_dir=None, workers=None, paper_scale=False):
    """Execute every cell and write all result files; returns CellResults."""
    out_dir = Path(out_dir or spec["output_dir"] or "campaign-out")
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = workers or spec.get("workers", 1)

    cells = [dict(c) for c in spec["cells"]]
    if paper_scale:
        for c in cells:
            c["iterations"] = PAPER_SCALE_ITERATIONS

    models, datasets = _load_assets(spec)
    model = models[spec["model"]]

    def job(cell):
        dataset = datasets[tuple(sorted(cell["dataset"].items()))]
        return _run_cell(cell, model, dataset)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, cells))
    else:
        results = [job(c) for c in cells]

    for r in results:
        _write_atomic(out_dir / f"{r.cell['name']}.csv", _cell_csv_text(r.dist))
    resolved = {
        "model": spec["model"],
        "dataset": spec["dataset"],
        "output_dir": str(out_dir.resolve()),
        "workers": workers,
        "cells": cells,
    }
    _write_atomic(out_dir / "campaign.json",
                  json.dumps(resolved, indent=1) + "\n")
    rows = [_summary_row(r.cell, r.dist.samples) for r in results]
    _write_summary_files(rows, out_dir, spec["model"],
                         durations={r.cell["name"]: r.duration for r in results})
    return results


def _cell_csv_text(dist):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CELL_CSV_COLUMNS)
    for t in dist.trials:
        w.writerow([t.trial, repr(float(t.accuracy)), int(t.accepted),
                    t.flips_injected, t.singles_corrected, t.doubles])
    return buf.getvalue()


def _write_atomic(path, text):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------- summaries

def median_is_saturated(median, n_classes=nn_engine.N_CLASSES,
                        epsilon=DEFAULT_EPSILON):
    """True when the median sits at the random-guess rate, within epsilon."""
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return abs(median - 1.0 / n_classes) <= epsilon


def detect_saturation(dist, n_classes=nn_engine.N_CLASSES,
                      epsilon=DEFAULT_EPSILON):
    return median_is_saturated(dist.median(), n_classes, epsilon)


def _summary_row(cell, samples):
    lo, q1, med, q3, hi = np.percentile(
        samples, [0, 25, 50, 75, 100], method="linear")
    row = {k: cell[k] for k in ("name", "mode", "target", "p", "limit",
                                "rand_variant", "accuracy_mode", "chained",
                                "iterations", "seed")}
    row.update({"min": float(lo), "q1": float(q1), "median": float(med),
                "q3": float(q3), "max": float(hi),
                "saturated": median_is_saturated(float(med))})
    return row


def _summary_csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in sorted(rows, key=lambda r: r["name"]):
        w.writerow([
            r["name"], r["mode"], r["target"], repr(float(r["p"])),
            "" if r["limit"] is None else r["limit"], r["rand_variant"],
            r["accuracy_mode"], int(r["chained"]), r["iterations"], r["seed"],
            repr(r["min"]), repr(r["q1"]), repr(r["median"]), repr(r["q3"]),
            repr(r["max"]), int(r["saturated"]),
        ])
    return buf.getvalue()


def _report_text(rows, model_path, durations=None):
    lines = ["fault-injection campaign report", ""]
    total = sum(r["iterations"] for r in rows)
    lines.append(f"cells: {len(rows)}   total trials: {total}")
    lines.append("")
    lines.append("storage overhead (check bits per data bit):")
    for mode in ProtectionMode:
        pct = storage_overhead(mode) * 100
        lines.append(f"  {mode.value:<5} {pct:.1f}%")
    lines.append(
        "  note: a full hardware realization of this scheme reports 47.5%"
    )
    lines.append(
        "  area overhead because it includes the detection and masking logic;"
    )
    lines.append(
        "  silicon area is outside what this software model measures."
    )
    lines.append("")
    lines.append("detected-double policy: ecc passes the stored data bits")
    lines.append("through uncorrected; spw masks the whole parameter to zero.")
    lines.append("")
    if model_path and Path(model_path).exists():
        model = model_io.read_model(model_path)
        lines.append("parameter statistics (dequantized, mean / stddev):")
        for name, st in nn_engine.model_stats(model).items():
            lines.append(f"  {name:<14} {st.mean:+.6f} / {st.stddev:.6f}")
        lines.append("")
    lines.append("cells (median [q1, q3], saturated, seconds):")
    for r in sorted(rows, key=lambda r: r["name"]):
        sat = "saturated" if r["saturated"] else "         "
        dur = ""
        if durations and r["name"] in durations:
            dur = f"  {durations[r['name']]:.1f}s"
        lines.append(f"  {r['name']:<34} {r['median']:.4f} "
                     f"[{r['q1']:.4f}, {r['q3']:.4f}]  {sat}{dur}")
    return "\n".join(lines) + "\n"


def _write_summary_files(rows, out_dir, model_path, durations=None):
    _write_atomic(out_dir / "summary.csv", _summary_csv_text(rows))
    _write_atomic(out_dir / "report.txt",
                  _report_text(rows, model_path, durations))
    figures.render_boxplots(rows, out_dir)


def _load_results(out_dir):
    out_dir = Path(out_dir)
    with open(out_dir / "campaign.json") as f:
        resolved = json.load(f)
    pairs = []
    for cell in resolved["cells"]:
        samples = []
        with open(out_dir / f"{cell['name']}.csv") as f:
            for rec in csv.DictReader(f):
                samples.append(float(rec["accuracy"]))
        if len(samples) != cell["iterations"]:
            raise ValueError(
                f"cell {cell['name']!r}: {len(samples)} rows, expected "
                f"{cell['iterations']}")
        pairs.append((cell, samples))
    return resolved, pairs


def summarize(out_dir):
    """Rebuild summary.csv, report.txt, and figures from a results dir."""
    out_dir = Path(out_dir)
    resolved, pairs = _load_results(out_dir)
    rows = [_summary_row(cell, samples) for cell, samples in pairs]
    _write_summary_files(rows, out_dir, resolved.get("model"))
    return rows


# ------------------------------------------------------------- comparisons

def _match_key(row):
    return (row["target"], row["p"], row["limit"], row["rand_variant"],
            row["accuracy_mode"], row["chained"], row["iterations"])


def compare(out_dir, baseline="ecc", candidate="spw"):
    """Candidate/baseline median ratios over cells matching in everything
    but protection mode; a zero-baseline ratio is reported as inf."""
    out_dir = Path(out_dir)
    _, pairs = _load_results(out_dir)
    rows = [_summary_row(cell, samples) for cell, samples in pairs]
    base = {_match_key(r): r for r in rows if r["mode"] == baseline}
    cand = {_match_key(r): r for r in rows if r["mode"] == candidate}
    out = []
    for key in sorted(base.keys() & cand.keys(),
                      key=lambda k: tuple(str(x) for x in k)):
        b, c = base[key], cand[key]
        if b["median"] == 0:
            ratio = math.inf if c["median"] > 0 else 1.0
        else:
            ratio = c["median"] / b["median"]
        out.append({
            "target": b["target"], "p": b["p"], "limit": b["limit"],
            "chained": b["chained"], "iterations": b["iterations"],
            "baseline_median": b["median"], "candidate_median": c["median"],
            "ratio": ratio,
        })
    if not out:
        raise ValueError(
            f"no cells match between modes {baseline!r} and {candidate!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["target", "p", "limit", "chained", "iterations",
                f"median_{baseline}", f"median_{candidate}", "ratio"])
    for r in out:
        w.writerow([r["target"], repr(float(r["p"])),
                    "" if r["limit"] is None else r["limit"],
                    int(r["chained"]), r["iterations"],
                    repr(r["baseline_median"]), repr(r["candidate_median"]),
                    repr(r["ratio"])])
    _write_atomic(out_dir / f"compare_{baseline}_vs_{candidate}.csv",
                  buf.getvalue())
    return out
