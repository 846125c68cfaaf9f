"""Information gain of a released trajectory over prior knowledge.

The value of a location dataset Z is measured as the reduction in
uncertainty about the owner's continuous-time position once Z is known.
Position uncertainty at a time t is the differential entropy of the
reconstructed location distribution (two independent Gaussians, one per
coordinate):

    IG_t = h(loc_t | prior) - h(loc_t | Z, prior)        [bits]
    IG   = integral of IG_t over the covering day        [bit seconds]

The prior is either uninformative (location anywhere in the region,
standard deviation sigma0 per coordinate) or an earlier, more degraded
release of the same trajectory. Reconstructions come from :mod:`.gp`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .degrade import DegradationSpec
from .gp import GaussianTrack, GpConfig, MeanFunction, fit_linear_mean, fit_track, train_length_scale
from .model import Measurement, Trajectory

DAY_SECONDS = 86400.0

LOG2_2PIE = math.log2(2.0 * math.pi * math.e)


def gaussian_entropy(variance: float) -> float:
    """Differential entropy in bits of a 1-d Gaussian with this variance."""
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    return 0.5 * (LOG2_2PIE + math.log2(variance))


@dataclass(frozen=True)
class PriorKnowledge:
    """What the recipient already knows before seeing Z.

    Either nothing beyond "somewhere in the study area" (``uninformative``:
    an N(0, sigma0^2) location per coordinate at every time), or an
    earlier, more degraded release of the same trajectory (``released``,
    carrying the released data and the spec that produced it). ``sigma0``
    left unset defers to the GP config's amplitude.
    """

    kind: str = "uninformative"
    sigma0: Optional[float] = None
    released: Optional[Trajectory] = None
    released_spec: Optional[DegradationSpec] = None

    def __post_init__(self):
        if self.kind == "uninformative":
            if self.released is not None:
                raise ValueError("uninformative prior carries no release")
        elif self.kind == "released":
            if self.released is None or self.released_spec is None:
                raise ValueError("released prior needs the released "
                                 "trajectory and its degradation spec")
        else:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.sigma0 is not None and not self.sigma0 > 0:
            raise ValueError("sigma0 must be > 0")

    @property
    def label(self) -> str:
        if self.kind == "uninformative":
            return "uninformative"
        return self.released_spec.label()

    @staticmethod
    def uninformative(sigma0: Optional[float] = None) -> "PriorKnowledge":
        return PriorKnowledge(kind="uninformative", sigma0=sigma0)

    @staticmethod
    def from_release(released: Trajectory,
                     spec: DegradationSpec) -> "PriorKnowledge":
        return PriorKnowledge(kind="released", released=released,
                              released_spec=spec)


def combine(z: Trajectory, prior: PriorKnowledge) -> List[Measurement]:
    """Merge the release Z with the prior's data into one evidence set.

    A perturbation prior shares Z's timestamps, so coinciding points fuse
    by inverse-variance weighting. Truncation and subsampling priors are
    subsets of Z (same seed, smaller ratio), and an identity prior equals
    Z, so in those cases Z alone already carries all the evidence.
    """
    if prior.kind == "uninformative":
        return list(z.points)
    if prior.released.trajectory_id != z.trajectory_id:
        raise ValueError(
            f"prior release is from trajectory "
            f"{prior.released.trajectory_id!r}, not {z.trajectory_id!r}")
    if prior.released_spec.kind != "perturbation":
        return list(z.points)
    by_time = {p.t: p for p in prior.released.points}
    merged: List[Measurement] = []
    for p in z.points:
        q = by_time.pop(p.t, None)
        if q is None:
            merged.append(p)
            continue
        wp = 1.0 / p.sigma ** 2
        wq = 1.0 / q.sigma ** 2
        merged.append(Measurement(
            x=(p.x * wp + q.x * wq) / (wp + wq),
            y=(p.y * wp + q.y * wq) / (wp + wq),
            t=p.t,
            sigma=(wp + wq) ** -0.5,
        ))
    merged.extend(by_time.values())
    merged.sort(key=lambda m: m.t)
    return merged


@dataclass(frozen=True)
class IntegrationConfig:
    """Time grid for integrating pointwise gain over the covering day.

    Measurement times augment the uniform grid by default because the
    reconstruction variance dips sharply at data points and a uniform grid
    alone would smear those dips."""

    grid_step: float = 60.0
    day_seconds: float = DAY_SECONDS
    include_measurement_times: bool = True

    def __post_init__(self):
        if not 0 < self.grid_step <= self.day_seconds:
            raise ValueError("grid_step must be in (0, day_seconds]")


def covering_day_start(t: float, day_seconds: float = DAY_SECONDS) -> float:
    """Start (epoch seconds) of the UTC day containing t."""
    return math.floor(t / day_seconds) * day_seconds


def ig_at(prior_track: GaussianTrack, posterior_track: GaussianTrack,
          times) -> np.ndarray:
    """Pointwise entropy reduction in bits at each query time."""
    p = prior_track.query(times)
    q = posterior_track.query(times)
    return 0.5 * (np.log2(p.var_x) - np.log2(q.var_x)
                  + np.log2(p.var_y) - np.log2(q.var_y))


def integration_grid(day_start: float, cfg: IntegrationConfig,
                     extra_times: Sequence[float] = ()) -> np.ndarray:
    """Uniform grid over the day, augmented with the measurement times.

    Extra times outside the day are dropped; duplicates collapse.
    """
    n = int(round(cfg.day_seconds / cfg.grid_step))
    grid = day_start + cfg.grid_step * np.arange(n + 1)
    if not cfg.include_measurement_times:
        return grid
    extra = np.asarray(extra_times, dtype=float)
    extra = extra[(extra >= day_start) & (extra <= day_start + cfg.day_seconds)]
    return np.unique(np.concatenate([grid, extra]))


def ig_over_period(prior_track: GaussianTrack, posterior_track: GaussianTrack,
                   day_start: float, extra_times: Sequence[float] = (),
                   cfg: IntegrationConfig = IntegrationConfig()) -> float:
    """Integrated gain over one day, in bit seconds (trapezoid rule)."""
    ts = integration_grid(day_start, cfg, extra_times)
    return float(trapezoid(ig_at(prior_track, posterior_track, ts), ts))


@dataclass(frozen=True)
class VoiRow:
    """One evaluated cell: a trajectory under a degradation and a prior.

    ``trace``, when kept, is a ((t, IG_t), ...) tuple over the integration
    grid for diagnosing a surprising total; batch runs leave it off.
    """

    trajectory_id: str
    prior: str
    kind: str
    param: float
    ig_bit_seconds: float
    length_scale_x: float
    length_scale_y: float
    day_start: float = 0.0
    day_end: float = DAY_SECONDS
    trace: Optional[tuple] = None

    def __post_init__(self):
        if self.day_end <= self.day_start:
            raise ValueError("day_end must be after day_start")

    @property
    def ig_bit_hours(self) -> float:
        return self.ig_bit_seconds / 3600.0

    def to_dict(self) -> dict:
        d = {
            "trajectory_id": self.trajectory_id,
            "prior": self.prior,
            "kind": self.kind,
            "param": self.param,
            "ig_bit_seconds": self.ig_bit_seconds,
            "ig_bit_hours": self.ig_bit_hours,
            "length_scale_x": self.length_scale_x,
            "length_scale_y": self.length_scale_y,
            "day_start": self.day_start,
            "day_end": self.day_end,
        }
        if self.trace is not None:
            d["trace"] = [[t, g] for t, g in self.trace]
        return d


VOI_CSV_FIELDS = ("trajectory_id", "prior", "kind", "param",
                  "ig_bit_seconds", "length_scale_x", "length_scale_y")


@dataclass
class VoiReport:
    """Ordered collection of evaluated cells with stable serialization."""

    rows: List[VoiRow] = field(default_factory=list)

    @staticmethod
    def sort_key(row: VoiRow):
        return (row.trajectory_id, row.prior, row.kind, row.param)

    def sorted(self) -> "VoiReport":
        return VoiReport(rows=sorted(self.rows, key=self.sort_key))

    def to_csv(self) -> str:
        lines = [",".join(VOI_CSV_FIELDS)]
        for r in self.rows:
            lines.append(",".join([
                r.trajectory_id, r.prior, r.kind, f"{r.param:g}",
                str(r.ig_bit_seconds), str(r.length_scale_x),
                str(r.length_scale_y),
            ]))
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n"
                       for r in self.rows)

    @staticmethod
    def from_jsonl(text: str) -> "VoiReport":
        rows = []
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            rows.append(VoiRow(
                trajectory_id=d["trajectory_id"], prior=d["prior"],
                kind=d["kind"], param=float(d["param"]),
                ig_bit_seconds=float(d["ig_bit_seconds"]),
                length_scale_x=float(d["length_scale_x"]),
                length_scale_y=float(d["length_scale_y"]),
                day_start=float(d.get("day_start", 0.0)),
                day_end=float(d.get("day_end", DAY_SECONDS)),
                trace=tuple((t, g) for t, g in d["trace"])
                if "trace" in d else None))
        return VoiReport(rows=rows)


def _released_fit(omega: Trajectory, cfg: GpConfig
                  ) -> Tuple[MeanFunction, MeanFunction, float]:
    """Mean functions and length scale learned from the earlier release."""
    ts = np.array([p.t for p in omega.points])
    xs = np.array([p.x for p in omega.points])
    ys = np.array([p.y for p in omega.points])
    sigmas = np.array([p.sigma for p in omega.points])
    mean_x = fit_linear_mean(ts, xs)
    mean_y = fit_linear_mean(ts, ys)
    l = cfg.fixed_length_scale
    if l is None:
        l = train_length_scale(ts, [xs, ys], sigmas, [mean_x, mean_y],
                               cfg.sigma_f, bounds=cfg.length_scale_bounds,
                               grid_size=cfg.grid_size,
                               trajectory_id=omega.trajectory_id)
    return mean_x, mean_y, l


def reconstruction_tracks(z: Trajectory, prior: PriorKnowledge,
                          gp_cfg: GpConfig = GpConfig()
                          ) -> Tuple[GaussianTrack, GaussianTrack, List[float]]:
    """Prior and posterior reconstructions plus the evidence timestamps.

    With an uninformative prior the baseline is a constant-variance track
    and the reconstruction is fit to Z alone (zero mean, length scale
    trained on Z). With a released prior, the mean trend and length scale
    come from the earlier release and are shared by both tracks, so the
    gain isolates what the new data adds rather than what refitting does.
    """
    if prior.kind == "uninformative":
        sigma0 = prior.sigma0 if prior.sigma0 is not None else gp_cfg.sigma_f
        cfg = GpConfig(sigma_f=sigma0,
                       length_scale_bounds=gp_cfg.length_scale_bounds,
                       fixed_length_scale=gp_cfg.fixed_length_scale,
                       grid_size=gp_cfg.grid_size)
        prior_track = fit_track([], cfg)
        posterior_track = fit_track(z.points, cfg,
                                    trajectory_id=z.trajectory_id)
        data_times = [p.t for p in z.points]
    else:
        omega = prior.released
        mean_x, mean_y, l = _released_fit(omega, gp_cfg)
        prior_track = fit_track(omega.points, gp_cfg, mean_x, mean_y,
                                length_scale=l,
                                trajectory_id=omega.trajectory_id)
        evidence = combine(z, prior)
        posterior_track = fit_track(evidence, gp_cfg, mean_x, mean_y,
                                    length_scale=l,
                                    trajectory_id=z.trajectory_id)
        data_times = sorted({p.t for p in evidence}
                            | {p.t for p in omega.points})
    return prior_track, posterior_track, data_times


def evaluate_voi(z: Trajectory, kind: str, param: float,
                 prior: PriorKnowledge, gp_cfg: GpConfig = GpConfig(),
                 integration: IntegrationConfig = IntegrationConfig(),
                 keep_trace: bool = False) -> VoiRow:
    """Score one release against one prior (one report row)."""
    prior_track, posterior_track, data_times = reconstruction_tracks(
        z, prior, gp_cfg)
    day_start = covering_day_start(min(data_times),
                                   integration.day_seconds)
    ts = integration_grid(day_start, integration, data_times)
    igs = ig_at(prior_track, posterior_track, ts)
    ig = float(trapezoid(igs, ts))
    return VoiRow(trajectory_id=z.trajectory_id, prior=prior.label,
                  kind=kind, param=param, ig_bit_seconds=ig,
                  length_scale_x=posterior_track.length_scale_x,
                  length_scale_y=posterior_track.length_scale_y,
                  day_start=day_start,
                  day_end=day_start + integration.day_seconds,
                  trace=tuple(zip(ts.tolist(), igs.tolist()))
                  if keep_trace else None)


# --- degradation equivalence ------------------------------------------------

@dataclass(frozen=True)
class EquivalencePoint:
    param_a: float
    ig: float
    param_b: Optional[float]


def equivalence_curve(s: Trajectory, specs, prior: PriorKnowledge,
                      gp_cfg: GpConfig = GpConfig(),
                      integration: IntegrationConfig = IntegrationConfig()
                      ) -> List[Tuple[object, float]]:
    """Integrated gain of each degraded release of one trajectory.

    Returns (spec, IG) pairs in the given spec order; feed one family's
    pairs through :func:`family_curve` before interpolating.
    """
    from .degrade import apply_spec
    out = []
    for spec in specs:
        z = apply_spec(s, spec)
        row = evaluate_voi(z, spec.kind, spec.param, prior, gp_cfg, integration)
        out.append((spec, row.ig_bit_seconds))
    return out


def family_curve(pairs: Iterable[Tuple[object, float]], kind: str
                 ) -> List[Tuple[float, float]]:
    """(parameter, IG) points of one degradation family, sorted by
    parameter. Duplicate parameters collapse to their median gain."""
    by_param: dict = {}
    for spec, ig in pairs:
        if spec.kind == kind:
            by_param.setdefault(spec.param, []).append(ig)
    return [(p, float(np.median(v))) for p, v in sorted(by_param.items())]


def param_at_ig(curve: Sequence[Tuple[float, float]],
                target: float) -> Optional[float]:
    """Parameter whose median gain equals the target, by linear
    interpolation between adjacent parameters. None outside the curve's
    gain range. The first crossing in parameter order wins."""
    for (p0, g0), (p1, g1) in zip(curve, curve[1:]):
        lo, hi = min(g0, g1), max(g0, g1)
        if lo <= target <= hi:
            if g1 == g0:
                return p0
            return p0 + (target - g0) / (g1 - g0) * (p1 - p0)
    for p, g in curve:
        if g == target:
            return p
    return None


def match_equivalents(curve_a: Sequence[Tuple[float, float]],
                      curve_b: Sequence[Tuple[float, float]]
                      ) -> Tuple[List[EquivalencePoint], bool]:
    """For each point of curve A, the curve-B parameter with equal gain.

    The boolean is True when every A level found a B equivalent, meaning
    the two degradation families cover fully overlapping value ranges.
    """
    points = [EquivalencePoint(param_a=p, ig=g, param_b=param_at_ig(curve_b, g))
              for p, g in curve_a]
    return points, all(pt.param_b is not None for pt in points)
