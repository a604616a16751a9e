"""Job dispatch and artifact emission for the command-line runner.

Every artifact is written deterministically: JSON with sorted keys, floats
in shortest round-trip form, no timestamps or host information.  Rerunning a
config into a fresh directory reproduces every byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import shutil
from pathlib import Path

import numpy as np

from . import schemas
from .config import ExperimentConfig
from .container import save_samples
from .errors import HallMHDError, IntegrityError, NonConvergenceError, StorageError
from .field import _to_phys
from .initial_data import generate_initial_data
from .lp import NormReport, build_partition, reports_to_csv
from .nonlinear import ExtendedState
from .solver import PicardResult, Trajectory, heat_trajectory, picard_global, picard_local
from .verification import (
    check_j_consistency,
    check_scaling,
    contraction_probe,
    estimate_constant,
    uniqueness_probe,
)

SERIES_COLUMNS = ("iter", "linf_low", "l1_high", "l2_mid", "x_norm", "residual")
_STATUS = {0: "ok", 2: "config", 3: "integrity", 4: "nonconvergence", 5: "io"}


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if hasattr(x, "to_dict"):
        return _clean(x.to_dict())
    return x


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


class ArtifactWriter:
    """Collects artifacts under one output directory and hashes them for the manifest."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.hashes: dict[str, str] = {}

    def _record(self, path: Path):
        self.hashes[path.relative_to(self.root).as_posix()] = hashlib.sha256(path.read_bytes()).hexdigest()

    def write_text(self, rel: str, text: str) -> Path:
        path = self.root / rel
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            raise StorageError(f"cannot write {path}: {exc}") from exc
        self._record(path)
        return path

    def json(self, rel: str, doc, schema: dict | None = None) -> Path:
        doc = _clean(doc)
        if schema is not None:
            schemas.validate_artifact(doc, schema, rel)
        return self.write_text(rel, json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def csv(self, rel: str, header, rows) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        return self.write_text(rel, buf.getvalue())

    def state(self, rel: str, theta: ExtendedState, **extra) -> Path:
        samples = _to_phys(theta.as_array(), theta.grid).reshape((9,) + theta.grid.shape)
        path = save_samples(self.root / rel, samples, theta.grid, fields="u,b,j", **extra)
        self._record(path)
        self._record(path.with_suffix(".json"))
        return path


def _solve_report(res: PicardResult) -> dict:
    d = {
        "status": res.status,
        "converged": res.converged,
        "iterates": res.iterates,
        "residual": res.residual,
        "y_norm": res.y_norm,
        "solution_norm": res.solution_norm,
        "contraction_ratios": res.ratios,
        "units": res.units,
    }
    if res.M_emp is not None:
        d["M_emp"] = res.M_emp
    return d


def _snapshots(w: ArtifactWriter, traj: Trajectory, stride: int):
    last = traj.n_nodes - 1
    nodes = set(range(0, last + 1, stride)) if stride > 0 else set()
    nodes.add(last)
    for k in sorted(nodes):
        w.state(f"fields/node_{k:05d}", traj.state(k), time=float(traj.times[k]))


def _require_converged(res: PicardResult):
    if not res.converged:
        raise NonConvergenceError(f"Picard iteration {res.status} after {res.iterates} iterates "
                                  f"(relative change {res.norms[-1].residual if res.norms else math.nan:.3e})")


def _job_solve(cfg: ExperimentConfig, theta0: ExtendedState, w: ArtifactWriter):
    solve = picard_local if cfg.kind == "solve_local" else picard_global
    res = solve(theta0, cfg.solver)
    w.csv("series.csv", SERIES_COLUMNS, res.series_rows())
    w.json("reports/solve.json", _solve_report(res), schemas.SOLVE_REPORT)
    _snapshots(w, res.traj, int(cfg.job.get("snapshot_stride", 0)))
    _require_converged(res)


def _job_estimate(cfg: ExperimentConfig, theta0, w: ArtifactWriter):
    j = cfg.job
    rep = estimate_constant(j["lemma_id"], int(j["n_samples"]), cfg.grid, cfg.norm, seed=cfg.seed,
                            alpha=j.get("alpha", 2.0), k_cut=j.get("k_cut", 2), T=cfg.solver.T,
                            n_steps=cfg.solver.n_steps, keep_ratios=True)
    w.csv("series.csv", ("sample", "ratio"), enumerate(rep.ratios))
    w.json(f"reports/estimate_{rep.lemma_id}.json", rep.to_dict(), schemas.ESTIMATE_REPORT)


def _job_consistency(cfg: ExperimentConfig, theta0, w: ArtifactWriter):
    res = picard_global(theta0, cfg.solver)
    w.json("reports/solve.json", _solve_report(res), schemas.SOLVE_REPORT)
    _require_converged(res)
    defects = check_j_consistency(res.traj, cfg.norm)
    heat = check_j_consistency(heat_trajectory(theta0, cfg.solver), cfg.norm)
    tol = float(cfg.job["tolerance"])
    w.csv("series.csv", ("node", "time", "defect", "heat_defect"),
          zip(range(len(defects)), res.traj.times, defects, heat))
    report = {"max_defect": float(defects.max()), "max_heat_defect": float(heat.max()), "tolerance": tol,
              "passed": bool(defects.max() < tol)}
    w.json("reports/consistency.json", report)
    if not report["passed"]:
        raise IntegrityError(f"J = curl B defect {report['max_defect']:.3e} exceeds {tol:.1e}")


def _job_scaling(cfg: ExperimentConfig, theta0, w: ArtifactWriter):
    mode = cfg.job["mode"]
    if mode == "heat":
        traj = heat_trajectory(theta0, cfg.solver)
    else:
        res = picard_global(theta0, cfg.solver)
        w.json("reports/solve.json", _solve_report(res), schemas.SOLVE_REPORT)
        _require_converged(res)
        traj = res.traj
    rep = check_scaling(traj, cfg.solver, float(cfg.job["lam"]), mode)
    w.csv("series.csv", ("mode", "lam", "residual_original", "residual_rescaled"),
          [(rep.mode, rep.lam, rep.residual_original, rep.residual_rescaled)])
    w.json("reports/scaling.json", rep.to_dict())
    if not rep.covariant:
        raise IntegrityError(f"scaling residual {rep.residual_rescaled:.3e} exceeds 10x {rep.residual_original:.3e}")


def _job_uniqueness(cfg: ExperimentConfig, theta0, w: ArtifactWriter):
    rep = uniqueness_probe(theta0, cfg.solver, tuple(cfg.job["epsilons"]), seed=cfg.seed)
    w.csv("series.csv", ("epsilon", "ratio"), zip(rep.epsilons, rep.ratios))
    w.json("reports/uniqueness.json", rep.to_dict())
    if rep.status != "ok":
        raise NonConvergenceError("uniqueness probe aborted: a run did not converge")


def _job_contraction(cfg: ExperimentConfig, theta0, w: ArtifactWriter):
    rep = contraction_probe(cfg.solver, cfg.grid, int(cfg.job["n_samples"]), seed=cfg.seed,
                            k_cut=cfg.job.get("k_cut", 2))
    w.csv("series.csv", ("K_emp", "radius", "samples"), [(rep.K_emp, rep.radius, rep.samples)])
    w.json("reports/contraction.json", rep.to_dict())


def _job_norm_report(cfg: ExperimentConfig, theta0: ExtendedState, w: ArtifactWriter):
    part = build_partition(theta0.grid)
    reports = [NormReport.evaluate(name, f, cfg.norm, part) for name, f in zip("ubj", theta0.fields)]
    w.write_text("series.csv", reports_to_csv(reports))
    for rep in reports:
        w.json(f"reports/norm_{rep.field_id}.json", rep.to_dict(), schemas.NORM_REPORT)


_JOBS = {
    "solve_global": _job_solve,
    "solve_local": _job_solve,
    "estimate": _job_estimate,
    "consistency": _job_consistency,
    "scaling": _job_scaling,
    "uniqueness": _job_uniqueness,
    "contraction": _job_contraction,
    "norm_report": _job_norm_report,
}


def run_experiment(cfg: ExperimentConfig, out_dir, config_bytes: bytes | None = None) -> int:
    """Run one job, write its artifacts and manifest, return the exit code.

    Library errors become exit codes 2-5 with a ``reports/failure.json``
    record; the output directory is cleared first so stale files never mix in.
    """
    root = Path(out_dir)
    try:
        if root.exists():
            shutil.rmtree(root)
        root.mkdir(parents=True)
    except OSError as exc:
        raise StorageError(f"cannot prepare output directory {root}: {exc}") from exc
    w = ArtifactWriter(root)
    inputs = {}
    if config_bytes is not None:
        inputs["config"] = hashlib.sha256(config_bytes).hexdigest()
    code = 0
    try:
        if cfg.initial_data.path is not None:
            inputs["initial_data_file"] = hashlib.sha256(Path(cfg.initial_data.path).read_bytes()).hexdigest()
        theta0 = generate_initial_data(cfg.initial_data, cfg.grid)
        inputs["initial_state"] = hashlib.sha256(np.ascontiguousarray(theta0.as_array()).tobytes()).hexdigest()
        w.state("fields/theta0", theta0)
        _JOBS[cfg.kind](cfg, theta0, w)
    except HallMHDError as exc:
        code = exc.exit_code
        w.json("reports/failure.json", {"error": type(exc).__name__, "message": str(exc), "exit_code": code},
               schemas.FAILURE)
    except OSError as exc:
        code = StorageError.exit_code
        w.json("reports/failure.json", {"error": "StorageError", "message": str(exc), "exit_code": code},
               schemas.FAILURE)
    manifest = {
        "format": "hallmhd-manifest/1",
        "kind": cfg.kind,
        "status": _STATUS.get(code, "error"),
        "exit_code": code,
        "config": cfg.to_dict(include_output=False),
        "inputs": inputs,
        "artifacts": dict(sorted(w.hashes.items())),
    }
    manifest = _clean(manifest)
    schemas.validate_artifact(manifest, schemas.MANIFEST, "manifest.json")
    try:
        (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write manifest: {exc}") from exc
    return code
