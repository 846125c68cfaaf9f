"""Batch driver: run the full pipeline from a declarative config.

Subcommands mirror the pipeline stages:

    ingest       PLT tree -> trajectory CSV + manifest
    degrade      trajectory CSV -> one degraded CSV per matrix entry
    voi          trajectory CSV -> gain report (JSONL + CSV) per cell
    baselines    trajectory CSV -> comparison metric CSV
    analyze      reports -> correlations + plot data
    equivalence  reports -> cross-family parameter matches for one trajectory

Outputs are byte-deterministic for a given config and input: work may fan
out over processes, but results are sorted on a stable key before a single
writer emits them, and timing information goes to the log only. Exit codes:
0 success, 1 configuration error, 2 duplicate/failing cells were isolated.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import analysis
from .baselines import (BASELINE_CSV_FIELDS, baseline_row, correctness_value)
from .degrade import DegradationSpec, apply_spec
from .infogain import (IntegrationConfig, PriorKnowledge, VoiReport, VoiRow,
                       evaluate_voi, match_equivalents, param_at_ig)
from .ingest import (SegmentationConfig, ingest_plt_tree, read_trajectory_csv,
                     write_trajectory_csv)
from .model import Trajectory
from .gp import GpConfig
from .runconfig import ConfigError, RunConfig, load_config

log = logging.getLogger("trajvoi")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _load_trajectories(cfg: RunConfig) -> List[Trajectory]:
    path = Path(cfg.trajectories_csv)
    if not path.exists():
        raise ConfigError(f"trajectory CSV not found: {path} (run ingest "
                          f"first or point trajectories_csv at existing data)")
    trajectories = read_trajectory_csv(path)
    if cfg.limit is not None:
        trajectories = trajectories[:cfg.limit]
    return trajectories


# --- cell matrix -------------------------------------------------------------

def _degradation_specs(cfg: RunConfig) -> List[DegradationSpec]:
    specs: List[DegradationSpec] = []
    if cfg.include_identity:
        specs.append(DegradationSpec(kind="identity"))
    specs += [DegradationSpec(kind="perturbation", total_noise=n, seed=cfg.seed)
              for n in cfg.noise_levels_m]
    specs += [DegradationSpec(kind="truncation", ratio=r)
              for r in cfg.truncation_ratios]
    specs += [DegradationSpec(kind="subsampling", ratio=r, seed=cfg.seed)
              for r in cfg.subsampling_ratios]
    return specs


def _prior_descriptors(cfg: RunConfig) -> List[Tuple[str, Optional[float]]]:
    priors: List[Tuple[str, Optional[float]]] = []
    if cfg.prior_uninformative:
        priors.append(("uninformative", None))
    priors += [("perturbation", n) for n in cfg.prior_noise_m]
    priors += [("truncation", r) for r in cfg.prior_truncation_ratios]
    priors += [("subsampling", r) for r in cfg.prior_subsampling_ratios]
    return priors


def _applicable(spec: DegradationSpec, prior_kind: str) -> bool:
    """Released priors only pair with their own degradation family (plus
    the identity release); the uninformative prior pairs with everything."""
    if prior_kind == "uninformative" or spec.kind == "identity":
        return True
    return spec.kind == prior_kind


def _build_prior(s: Trajectory, prior_kind: str, prior_param: Optional[float],
                 seed: int, prior_seed: int) -> PriorKnowledge:
    if prior_kind == "uninformative":
        return PriorKnowledge.uninformative()
    if prior_kind == "perturbation":
        spec = DegradationSpec(kind="perturbation", total_noise=prior_param,
                               seed=prior_seed)
    elif prior_kind == "truncation":
        spec = DegradationSpec(kind="truncation", ratio=prior_param)
    elif prior_kind == "subsampling":
        # same seed as the release itself: nesting makes Z a superset
        spec = DegradationSpec(kind="subsampling", ratio=prior_param,
                               seed=seed)
    else:
        raise ValueError(f"unknown prior kind {prior_kind!r}")
    return PriorKnowledge.from_release(apply_spec(s, spec), spec)


def _prior_label(kind: str, param: Optional[float]) -> str:
    return "uninformative" if kind == "uninformative" else f"{kind}:{param:g}"


def _voi_cell(task):
    """Evaluate one (trajectory, spec, prior) cell; never raises."""
    (traj, spec, prior_kind, prior_param, seed, prior_seed,
     gp_cfg, integration) = task
    started = time.perf_counter()
    label = _prior_label(prior_kind, prior_param)
    try:
        z = apply_spec(traj, spec)
        prior = _build_prior(traj, prior_kind, prior_param, seed, prior_seed)
        row = evaluate_voi(z, spec.kind, spec.param, prior, gp_cfg,
                           integration)
        return ("ok", row, traj.trajectory_id, time.perf_counter() - started)
    except Exception as e:  # isolation: one bad cell must not sink the batch
        record = {"trajectory_id": traj.trajectory_id, "prior": label,
                  "kind": spec.kind, "param": spec.param,
                  "error": f"{type(e).__name__}: {e}"}
        return ("error", record, traj.trajectory_id,
                time.perf_counter() - started)


def _run_cells(tasks, jobs: int):
    if jobs <= 1 or len(tasks) < 2:
        return [_voi_cell(t) for t in tasks]
    chunk = max(1, len(tasks) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_voi_cell, tasks, chunksize=chunk))


# --- subcommands -------------------------------------------------------------

def cmd_ingest(cfg: RunConfig) -> int:
    if cfg.plt_root is None:
        raise ConfigError("ingest needs plt_root in the config")
    root = Path(cfg.plt_root)
    if not root.is_dir():
        raise ConfigError(f"plt_root is not a directory: {root}")
    started = time.perf_counter()
    trajectories, manifest = ingest_plt_tree(root, cfg.region, cfg.projection,
                                             cfg.segmentation)
    if cfg.limit is not None:
        trajectories = trajectories[:cfg.limit]
    out = Path(cfg.output_dir)
    traj_csv = Path(cfg.trajectories_csv)
    traj_csv.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(trajectories, traj_csv)
    _write_text(out / "ingest_manifest.json", manifest.to_json())
    log.info("ingest: %d files, %d trajectories, %d measurements in %.1fs",
             manifest.files_read, len(trajectories),
             sum(len(t) for t in trajectories), time.perf_counter() - started)
    return 0


def cmd_degrade(cfg: RunConfig) -> int:
    trajectories = _load_trajectories(cfg)
    out = Path(cfg.output_dir) / "degraded"
    for spec in _degradation_specs(cfg):
        name = "identity" if spec.kind == "identity" \
            else f"{spec.kind}_{spec.param:g}"
        degraded = [apply_spec(t, spec) for t in trajectories]
        dest = out / f"{name}.csv"
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(degraded, dest)
        log.info("degrade: wrote %s (%d trajectories)", name, len(degraded))
    return 0


def cmd_voi(cfg: RunConfig) -> int:
    trajectories = _load_trajectories(cfg)
    specs = _degradation_specs(cfg)
    priors = _prior_descriptors(cfg)
    if not specs:
        raise ConfigError("degradation matrix is empty")
    if not priors:
        raise ConfigError("no prior scenarios configured")

    tasks = []
    seen = set()
    duplicates = 0
    for traj in trajectories:
        for prior_kind, prior_param in priors:
            for spec in specs:
                if not _applicable(spec, prior_kind):
                    continue
                key = (traj.trajectory_id, spec.kind, spec.param,
                       _prior_label(prior_kind, prior_param))
                if key in seen:
                    duplicates += 1
                    continue
                seen.add(key)
                tasks.append((traj, spec, prior_kind, prior_param, cfg.seed,
                              cfg.effective_prior_seed(), cfg.gp,
                              cfg.integration))
    if duplicates:
        log.warning("voi: %d duplicate cells in the matrix were dropped",
                    duplicates)

    started = time.perf_counter()
    outcomes = _run_cells(tasks, cfg.jobs)

    rows: List[VoiRow] = []
    errors: List[dict] = []
    per_traj: Dict[str, list] = {}
    for status, payload, tid, seconds in outcomes:
        per_traj.setdefault(tid, [0, 0.0])
        per_traj[tid][0] += 1
        per_traj[tid][1] += seconds
        (rows if status == "ok" else errors).append(payload)

    report = VoiReport(rows=rows).sorted()
    errors.sort(key=lambda e: (e["trajectory_id"], e["prior"], e["kind"],
                               e["param"]))
    out = Path(cfg.output_dir)
    _write_text(out / "voi_report.jsonl", report.to_jsonl())
    _write_text(out / "voi_report.csv", report.to_csv())
    _write_text(out / "voi_errors.jsonl",
                "".join(json.dumps(e, sort_keys=True) + "\n" for e in errors))

    for tid in sorted(per_traj):
        n, seconds = per_traj[tid]
        log.info("voi: trajectory %s: %d cells in %.2fs", tid, n, seconds)
    log.info("voi: %d cells (%d failed) in %.1fs wall",
             len(tasks), len(errors), time.perf_counter() - started)
    if errors:
        log.warning("voi: %d cells failed; see voi_errors.jsonl", len(errors))
    return 2 if errors else 0


def _baseline_task(args):
    traj, grid, spp, gp_cfg = args
    try:
        corr = correctness_value(traj, traj, PriorKnowledge.uninformative(),
                                 gp_cfg)
        return ("ok", baseline_row(traj, grid, spp, corr))
    except Exception as e:
        return ("error", {"trajectory_id": traj.trajectory_id,
                          "error": f"{type(e).__name__}: {e}"})


def cmd_baselines(cfg: RunConfig) -> int:
    trajectories = _load_trajectories(cfg)
    tasks = [(t, cfg.entropy_grid, cfg.spp, cfg.gp) for t in trajectories]
    if cfg.jobs <= 1 or len(tasks) < 2:
        outcomes = [_baseline_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_baseline_task, tasks,
                                     chunksize=max(1, len(tasks) // (cfg.jobs * 8))))
    rows = [p for status, p in outcomes if status == "ok"]
    errors = [p for status, p in outcomes if status == "error"]
    rows.sort(key=lambda r: r["trajectory_id"])

    lines = [",".join(BASELINE_CSV_FIELDS)]
    for r in rows:
        lines.append(",".join([
            r["trajectory_id"], str(r["size"]), repr(float(r["duration_s"])),
            repr(float(r["distance_m"])), repr(float(r["h_spatial_bits"])),
            repr(float(r["h_temporal_bits"])), repr(float(r["spp"])),
            repr(float(r["correctness_err_m"])),
        ]))
    _write_text(Path(cfg.output_dir) / "baselines.csv",
                "\n".join(lines) + "\n")
    log.info("baselines: %d rows (%d failed)", len(rows), len(errors))
    for e in errors:
        log.warning("baselines: %s failed: %s", e["trajectory_id"], e["error"])
    return 2 if errors else 0


def cmd_analyze(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    report_path = out / "voi_report.jsonl"
    baseline_path = out / "baselines.csv"
    for p in (report_path, baseline_path):
        if not p.exists():
            raise ConfigError(f"analyze needs {p}; run voi and baselines first")
    all_rows = VoiReport.from_jsonl(report_path.read_text()).rows
    raw_rows = [r for r in all_rows
                if r.kind == "identity" and r.prior == "uninformative"]
    if not raw_rows:
        raise ConfigError("analyze needs identity-release cells under the "
                          "uninformative prior in voi_report.jsonl")
    with open(baseline_path, newline="") as fh:
        baseline_rows = list(csv.DictReader(fh))
    try:
        results, lines = analysis.correlation_study(raw_rows, baseline_rows)
    except ValueError as e:
        raise ConfigError(str(e))

    by_id = {r["trajectory_id"]: r for r in baseline_rows}
    ids = sorted(r.trajectory_id for r in raw_rows)
    ig = np.array([r.ig_bit_seconds
                   for r in sorted(raw_rows, key=lambda r: r.trajectory_id)])
    for name, column in analysis.STUDY_PAIRS:
        vals = np.array([float(by_id[i][column]) for i in ids])
        _write_text(out / f"hist2d_{column}.csv",
                    analysis.histogram2d_csv(vals, ig))
    _write_text(out / "correlations.csv", analysis.correlations_csv(results))
    _write_text(out / "regression_lines.csv",
                analysis.regression_lines_csv(lines))
    _write_text(out / "box_quartiles.csv", analysis.box_quartiles_csv(all_rows))

    report = {
        "config_hash": cfg.config_hash(),
        "n": len(raw_rows),
        "correlations": [{"x": r.x_name, "y": r.y_name, "rho": r.rho,
                          "n": r.n} for r in results],
        "huber_lines": {name: {"slope": f.slope, "intercept": f.intercept,
                               "converged": f.converged}
                        for name, f in lines.items()},
    }
    _write_text(out / "analyze_report.json",
                json.dumps(report, sort_keys=True, indent=2) + "\n")
    for r in results:
        log.info("analyze: rho(%s, %s) = %.4f (n=%d)",
                 r.x_name, r.y_name, r.rho, r.n)
    return 0


def _curves_from_rows(rows: Sequence[VoiRow], base_sigma: float
                      ) -> Dict[str, List[Tuple[float, float]]]:
    """Per-family (parameter, gain) curves for one trajectory.

    The identity release joins every family: as ratio 1.0 for truncation
    and subsampling, and as the base measurement noise for perturbation.
    """
    acc: Dict[str, Dict[float, list]] = {
        "perturbation": {}, "truncation": {}, "subsampling": {}}
    for r in rows:
        if r.kind == "identity":
            targets = (("perturbation", base_sigma), ("truncation", 1.0),
                       ("subsampling", 1.0))
        elif r.kind in acc:
            targets = ((r.kind, r.param),)
        else:
            continue
        for kind, param in targets:
            acc[kind].setdefault(param, []).append(r.ig_bit_seconds)
    return {kind: [(p, float(np.median(v))) for p, v in sorted(d.items())]
            for kind, d in acc.items() if d}


def cmd_equivalence(cfg: RunConfig, trajectory_id: str, kind: str,
                    param: float) -> int:
    report_path = Path(cfg.output_dir) / "voi_report.jsonl"
    if not report_path.exists():
        raise ConfigError(f"equivalence needs {report_path}; run voi first")
    rows = [r for r in VoiReport.from_jsonl(report_path.read_text()).rows
            if r.trajectory_id == trajectory_id
            and r.prior == "uninformative"]
    if not rows:
        raise ConfigError(f"no uninformative-prior cells for trajectory "
                          f"{trajectory_id!r} in {report_path}")
    curves = _curves_from_rows(rows, cfg.segmentation.default_sigma)
    if kind not in curves:
        raise ConfigError(f"no {kind!r} curve for trajectory "
                          f"{trajectory_id!r}; families: {sorted(curves)}")
    curve = curves[kind]
    params = [p for p, _ in curve]
    if not params[0] <= param <= params[-1]:
        raise ConfigError(f"parameter {param:g} outside the sampled "
                          f"{kind} range [{params[0]:g}, {params[-1]:g}]")
    target_ig = float(np.interp(param, params, [g for _, g in curve]))

    equivalents = {}
    full_overlap = {}
    for other, other_curve in curves.items():
        if other == kind:
            continue
        equivalents[other] = param_at_ig(other_curve, target_ig)
        _, full_overlap[other] = match_equivalents(curve, other_curve)
    report = {
        "config_hash": cfg.config_hash(),
        "trajectory_id": trajectory_id,
        "target": {"kind": kind, "param": param,
                   "ig_bit_seconds": target_ig},
        "equivalents": equivalents,
        "full_overlap": full_overlap,
        "curves": {k: [[p, g] for p, g in c] for k, c in curves.items()},
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    _write_text(Path(cfg.output_dir) / f"equivalence_{trajectory_id}.json",
                text)
    sys.stdout.write(text)
    return 0


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="YAML run configuration (defaults reproduce the "
                             "reference protocol)")
    common.add_argument("--seed", type=int, help="override degradation seed")
    common.add_argument("--limit", type=int, metavar="N",
                        help="only process the first N trajectories")
    common.add_argument("--jobs", type=int, metavar="J",
                        help="worker processes for cell evaluation")

    parser = argparse.ArgumentParser(
        prog="trajvoi",
        description="Quantify the intrinsic value of GPS trajectories as "
                    "information gain over prior knowledge.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common],
                   help="parse a PLT tree into the trajectory CSV")
    sub.add_parser("degrade", parents=[common],
                   help="materialize every degraded version as CSV")
    sub.add_parser("voi", parents=[common],
                   help="evaluate information gain for every cell")
    sub.add_parser("baselines", parents=[common],
                   help="compute comparison metrics per trajectory")
    sub.add_parser("analyze", parents=[common],
                   help="correlate gain with the comparison metrics")
    eq = sub.add_parser("equivalence", parents=[common],
                        help="find degradation parameters of equal gain")
    eq.add_argument("--trajectory", required=True, metavar="ID")
    eq.add_argument("--kind", required=True,
                    choices=("perturbation", "truncation", "subsampling"))
    eq.add_argument("--param", required=True, type=float,
                    help="target degradation parameter (meters or ratio)")
    return parser


def entrypoint(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.limit is not None:
            cfg.limit = args.limit
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            cfg.jobs = args.jobs
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "degrade":
            return cmd_degrade(cfg)
        if args.command == "voi":
            return cmd_voi(cfg)
        if args.command == "baselines":
            return cmd_baselines(cfg)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "equivalence":
            return cmd_equivalence(cfg, args.trajectory, args.kind, args.param)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(entrypoint())


if __name__ == "__main__":
    main()
