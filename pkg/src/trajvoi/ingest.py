"""GPS log ingestion: PLT parsing, region filtering, gap segmentation, CSV I/O.

PLT files (as produced by common GPS loggers) carry 6 header lines followed
by one record per line:

    lat,lon,0,altitude_ft,serial_days,YYYY-MM-DD,HH:MM:SS

Only lat, lon and the date/time fields are used; timestamps are interpreted
as UTC. Malformed data lines are skipped and counted rather than aborting
the run, since large dumps routinely contain stray lines.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

from .model import Measurement, ProjectionConfig, Region, Trajectory, project

PLT_HEADER_LINES = 6

TRAJECTORY_CSV_FIELDS = ("trajectory_id", "owner_id", "t", "x", "y", "sigma")


class PltFormatError(ValueError):
    """Raised when a PLT file is too short to contain its fixed header."""


@dataclass(frozen=True)
class SegmentationConfig:
    """Gap threshold and default per-point uncertainty used at ingest."""

    max_gap: float = 300.0        # seconds; a larger gap starts a new trajectory
    default_sigma: float = 3.0    # meters; typical GPS-phone accuracy

    def __post_init__(self):
        if not self.max_gap > 0:
            raise ValueError("max_gap must be > 0")
        if self.default_sigma < 0:
            raise ValueError("default_sigma must be >= 0")


@dataclass
class IngestManifest:
    """Counters accumulated over an ingest run."""

    files_read: int = 0
    lines_skipped: int = 0
    measurements_retained: int = 0
    trajectories: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "files_read": self.files_read,
                "lines_skipped": self.lines_skipped,
                "measurements_retained": self.measurements_retained,
                "trajectories": self.trajectories,
            },
            sort_keys=True,
            indent=2,
        ) + "\n"


@dataclass
class PltParseResult:
    records: List[Tuple[float, float, float]] = field(default_factory=list)
    lines_skipped: int = 0


def _parse_plt_line(line: str) -> Tuple[float, float, float]:
    parts = line.split(",")
    if len(parts) < 7:
        raise ValueError("short line")
    lat = float(parts[0])
    lon = float(parts[1])
    stamp = datetime.strptime(parts[5].strip() + " " + parts[6].strip(),
                              "%Y-%m-%d %H:%M:%S")
    t = stamp.replace(tzinfo=timezone.utc).timestamp()
    if not (math.isfinite(lat) and math.isfinite(lon)):
        raise ValueError("non-finite coordinate")
    return lon, lat, t


def parse_plt(file_bytes: bytes) -> PltParseResult:
    """Parse PLT content into (lon, lat, t) records in file order.

    Files shorter than the fixed 6-line header are rejected; a file with
    exactly the header and no data lines yields an empty record list.
    Any data line that fails to parse is counted in ``lines_skipped``.
    """
    text = file_bytes.decode("utf-8", errors="replace")
    lines = text.splitlines()
    if len(lines) < PLT_HEADER_LINES:
        raise PltFormatError(
            f"PLT file has {len(lines)} lines, shorter than the "
            f"{PLT_HEADER_LINES}-line header"
        )
    result = PltParseResult()
    for line in lines[PLT_HEADER_LINES:]:
        if not line.strip():
            continue
        try:
            result.records.append(_parse_plt_line(line))
        except (ValueError, IndexError):
            result.lines_skipped += 1
    return result


def filter_region(records: Iterable[Tuple[float, float, float]],
                  region: Region) -> List[Tuple[float, float, float]]:
    """Keep records inside the bounding box (inclusive), preserving order."""
    return [r for r in records if region.contains(r[0], r[1])]


def segment(records: Sequence[Tuple[float, float, float]],
            cfg: SegmentationConfig,
            projection: ProjectionConfig,
            owner_id: str = "",
            id_prefix: str | None = None) -> List[Trajectory]:
    """Split a time-sorted record stream into trajectories at large time gaps.

    A new trajectory starts whenever the gap to the next record is strictly
    greater than ``cfg.max_gap``. Every measurement is projected to local
    meters and assigned ``cfg.default_sigma``. The concatenation of the
    output reproduces the input records exactly.
    """
    records = list(records)
    for a, b in zip(records, records[1:]):
        if b[2] < a[2]:
            raise ValueError(
                f"segment: records must be sorted by time ({a[2]} then {b[2]})"
            )
    if not records:
        return []
    prefix = id_prefix if id_prefix is not None else (owner_id or "traj")

    groups: List[List[Tuple[float, float, float]]] = [[records[0]]]
    for prev, cur in zip(records, records[1:]):
        if cur[2] - prev[2] > cfg.max_gap:
            groups.append([cur])
        else:
            groups[-1].append(cur)

    trajectories = []
    for k, group in enumerate(groups):
        points = []
        for lon, lat, t in group:
            x, y = project(lon, lat, projection)
            points.append(Measurement(x=x, y=y, t=t, sigma=cfg.default_sigma))
        trajectories.append(Trajectory(points=tuple(points),
                                       owner_id=owner_id,
                                       trajectory_id=f"{prefix}_{k:05d}"))
    return trajectories


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def write_trajectory_csv(trajectories: Iterable[Trajectory], path) -> None:
    """Write trajectories to the flat CSV interchange format.

    Deterministic formatting: x, y and sigma use 9 significant digits;
    t keeps millisecond fixed-point precision because epoch-scale values
    would lose whole seconds at 9 significant digits.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_CSV_FIELDS) + "\n")
        for traj in trajectories:
            for p in traj.points:
                fh.write(
                    f"{traj.trajectory_id},{traj.owner_id},"
                    f"{p.t:.3f},{_fmt(p.x)},{_fmt(p.y)},{_fmt(p.sigma)}\n"
                )


def read_trajectory_csv(path) -> List[Trajectory]:
    """Read the flat CSV format back into trajectories (file order)."""
    trajectories: List[Trajectory] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRAJECTORY_CSV_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"trajectory CSV missing columns: {sorted(missing)}")
        cur_id = None
        cur_owner = ""
        points: List[Measurement] = []
        for row in reader:
            tid = row["trajectory_id"]
            if tid != cur_id and cur_id is not None:
                trajectories.append(Trajectory(tuple(points), cur_owner, cur_id))
                points = []
            cur_id = tid
            cur_owner = row["owner_id"]
            points.append(Measurement(x=float(row["x"]), y=float(row["y"]),
                                      t=float(row["t"]), sigma=float(row["sigma"])))
        if cur_id is not None:
            trajectories.append(Trajectory(tuple(points), cur_owner, cur_id))
    return trajectories


def ingest_plt_tree(root, region: Region, projection: ProjectionConfig,
                    cfg: SegmentationConfig) -> Tuple[List[Trajectory], IngestManifest]:
    """Ingest a directory tree of PLT files grouped per owner.

    Owners follow the common logger layout ``<root>/<owner>/Trajectory/*.plt``;
    files not under a ``Trajectory`` folder are grouped by their immediate
    parent directory name. Records are merged per owner, sorted by time,
    filtered to the region and segmented.
    """
    root = Path(root)
    manifest = IngestManifest()
    by_owner: dict[str, List[Tuple[float, float, float]]] = {}
    for plt_path in sorted(root.rglob("*.plt")):
        owner = plt_path.parent.name
        if owner.lower() == "trajectory":
            owner = plt_path.parent.parent.name
        result = parse_plt(plt_path.read_bytes())
        manifest.files_read += 1
        manifest.lines_skipped += result.lines_skipped
        by_owner.setdefault(owner, []).extend(result.records)

    trajectories: List[Trajectory] = []
    for owner in sorted(by_owner):
        records = filter_region(by_owner[owner], region)
        records.sort(key=lambda r: r[2])
        manifest.measurements_retained += len(records)
        trajectories.extend(segment(records, cfg, projection, owner_id=owner))
    manifest.trajectories = len(trajectories)
    return trajectories, manifest
