"""File formats: columnar JSON for complex matrices and masks, CSV exports
for spectra and dual-polynomial grids, and the result files the experiment
driver writes (summary.json, trials.csv, sweep/phase/coherence CSVs)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dualpoly import PeakSet, RFGrid
from .errors import ParameterError
from .harness import ScenarioResult
from .signal_model import SampleMask
from .validation import as_complex_matrix


# ---------------------------------------------------------------------------
# matrices and masks


def matrix_to_json(x) -> dict:
    """Columnar JSON form {rows, cols, re, im} (row-major entry order)."""
    x = as_complex_matrix(x)
    return {
        "rows": x.shape[0],
        "cols": x.shape[1],
        "re": x.real.ravel().tolist(),
        "im": x.imag.ravel().tolist(),
    }


def matrix_from_json(d: dict) -> np.ndarray:
    rows, cols = int(d["rows"]), int(d["cols"])
    re = np.asarray(d["re"], dtype=float)
    im = np.asarray(d["im"], dtype=float)
    if re.size != rows * cols or im.size != rows * cols:
        raise ParameterError("re/im length does not match rows*cols")
    return (re + 1j * im).reshape(rows, cols)


def mask_to_json(mask: SampleMask) -> dict:
    return {
        "m": mask.m,
        "n": mask.n,
        "indices": [[int(i), int(j)] for i, j in mask.indices],
    }


def mask_from_json(d: dict) -> SampleMask:
    return SampleMask(int(d["m"]), int(d["n"]), np.asarray(d["indices"], dtype=int))


def peaks_to_json(peaks: PeakSet) -> list:
    return [{"r": p.r, "f": p.f, "value": p.value} for p in peaks]


# ---------------------------------------------------------------------------
# grid CSVs


def write_grid_csv(path, grid: RFGrid, values, header: str = "r,f,qnorm") -> None:
    """Row-major (r outer, f inner) CSV of a surface over an (r, f) grid."""
    values = np.asarray(values)
    if values.shape != (grid.r_values.size, grid.f_values.size):
        raise ParameterError("values shape does not match grid")
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for i, r in enumerate(grid.r_values):
            for j, f in enumerate(grid.f_values):
                fh.write(f"{r:.10g},{f:.10g},{values[i, j]:.12g}\n")


def write_spectrum_csv(path, f_values, values, r: float = 1.0) -> None:
    """1-D pseudospectrum export with the shared r,f,value layout."""
    with open(path, "w", newline="") as fh:
        fh.write("r,f,value\n")
        for f, v in zip(f_values, values):
            fh.write(f"{r:.10g},{f:.10g},{v:.12g}\n")


# ---------------------------------------------------------------------------
# experiment outputs


def write_scenario_outputs(result: ScenarioResult, out_dir) -> None:
    """summary.json plus trials.csv (one row per trial per algorithm)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = result.to_summary()
    timing = {
        name: float(np.mean([t.results[name].wall_time_s for t in result.trials]))
        for name in result.config.algorithms
    }
    summary["timing"] = {"mean_wall_time_s": timing}
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    fields = [
        "scenario", "trial", "algorithm", "param_success", "freq_success",
        "data_success", "rel_err", "n_peaks", "reason", "peaks", "wall_time_s",
    ]
    with open(out / "trials.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for t in result.trials:
            for name in result.config.algorithms:
                row = t.results[name].to_row()
                row.update(scenario=t.scenario, trial=t.trial)
                writer.writerow({k: row[k] for k in fields})


def write_sweep_csv(results: dict, out_path, sweep_param: str) -> None:
    """Aggregate table of a 1-D sweep: one row per (value, algorithm)."""
    fields = [sweep_param, "algorithm", "n_trials", "p_param", "p_freq",
              "p_data", "mean_rel_err", "median_rel_err"]
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for value, res in results.items():
            for name, agg in res.aggregates.items():
                writer.writerow({
                    sweep_param: value,
                    "algorithm": name,
                    "n_trials": agg["n_trials"],
                    "p_param": agg.get("p_param"),
                    "p_freq": agg.get("p_freq"),
                    "p_data": agg.get("p_data"),
                    "mean_rel_err": agg.get("mean_rel_err"),
                    "median_rel_err": agg.get("median_rel_err"),
                })


def write_phase_csvs(phase: dict, out_dir) -> None:
    """Three CSV grids (param / data / difference), rows = K, cols = |Omega|."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = "k\\n_observed," + ",".join(str(v) for v in phase["n_observed_values"])
    for key, fname in (
        ("p_param", "phase_param.csv"),
        ("p_data", "phase_data.csv"),
        ("p_diff", "phase_diff.csv"),
    ):
        with open(out / fname, "w", newline="") as fh:
            fh.write(header + "\n")
            for k, row in zip(phase["k_values"], phase[key]):
                fh.write(str(k) + "," + ",".join(f"{v:.6g}" for v in row) + "\n")


def write_coherence_csv(rows: list, out_path, sweep_param: str) -> None:
    fields = [sweep_param, "mu0", "mu1", "mu2", "p_data",
              "wilson_lo", "wilson_hi", "n_trials"]
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            out_row = dict(row)
            out_row[sweep_param] = out_row.pop("value")
            writer.writerow(out_row)


def write_solve_report_json(report, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_solver_config(path) -> dict:
    """Read a solver-options config file: {"nnm": {...}, "anm": {...}}."""
    with open(path) as fh:
        d = json.load(fh)
    unknown = set(d) - {"nnm", "anm"}
    if unknown:
        raise ParameterError(f"unknown solver config sections: {sorted(unknown)}")
    return d
