"""Energy time-series handling for the simulated prosumer nodes.

Covers the whole data path: CSV ingestion in the meter-export format,
synthetic PV generation as a stand-in for real prosumer data, per-hour
min-max normalization, sliding-window extraction, and the ratio-based
partitioning that hands each node of a cluster its share of windows.

Timestamps are minutes since 1970-01-01 00:00 (naive), always on the
15-minute grid. A series is stored as parallel arrays plus the index
ranges of its contiguous segments; windows never cross a gap.
"""

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from .errors import ConfigError, ValidationError
from .seeds import derive_rng

_EPOCH = datetime(1970, 1, 1)
STEP_MINUTES = 15
READINGS_PER_HOUR = 4
READINGS_PER_DAY = 96

CSV_COLUMNS = ("pod_id", "timestamp", "active_load")


def parse_dhh(text: str) -> int:
    """yyyyMMddhhmm -> minutes since epoch, rejecting off-grid stamps."""
    try:
        dt = datetime.strptime(text.strip(), "%Y%m%d%H%M")
    except ValueError as exc:
        raise ValidationError(f"timestamp {text!r} is not yyyyMMddhhmm") from exc
    minutes = int((dt - _EPOCH).total_seconds()) // 60
    if minutes % STEP_MINUTES != 0:
        raise ValidationError(f"timestamp {text!r} is not on the 15-minute grid")
    return minutes


def format_dhh(minutes: int) -> str:
    return (_EPOCH + timedelta(minutes=int(minutes))).strftime("%Y%m%d%H%M")


@dataclass(frozen=True)
class EnergySeries:
    """Ordered 15-minute load observations for one point of distribution."""

    pod_id: str
    timestamps: np.ndarray  # int64 minutes since epoch, strictly increasing
    loads: np.ndarray  # float64 kWh, >= 0
    segments: tuple[tuple[int, int], ...]  # half-open index ranges, gap-free inside

    def __len__(self) -> int:
        return len(self.timestamps)


def energy_series(pod_id: str, timestamps, loads) -> EnergySeries:
    """Validate raw arrays and segment them at every hole in the 15-min grid."""
    ts = np.asarray(timestamps, dtype=np.int64)
    vals = np.asarray(loads, dtype=np.float64)
    if ts.shape != vals.shape or ts.ndim != 1:
        raise ValidationError(f"pod {pod_id}: timestamps and loads must be equal-length 1-D")
    if len(ts) == 0:
        raise ValidationError(f"pod {pod_id}: empty series")
    if np.any(ts % STEP_MINUTES != 0):
        raise ValidationError(f"pod {pod_id}: timestamps off the 15-minute grid")
    diffs = np.diff(ts)
    if np.any(diffs <= 0):
        raise ValidationError(f"pod {pod_id}: timestamps not strictly increasing")
    if np.any(vals < 0):
        raise ValidationError(f"pod {pod_id}: negative load values")
    breaks = np.flatnonzero(diffs != STEP_MINUTES) + 1
    edges = [0, *breaks.tolist(), len(ts)]
    segments = tuple((edges[i], edges[i + 1]) for i in range(len(edges) - 1))
    return EnergySeries(pod_id=pod_id, timestamps=ts, loads=vals, segments=segments)


def ingest_csv(path, schema: dict[str, str] | None = None) -> list[EnergySeries]:
    """Read a meter export (header pod_id,timestamp,active_load) into series.

    `schema` remaps the expected roles onto differently named columns.
    Rows are grouped by pod and sorted by time; duplicate (pod, timestamp)
    pairs and negative loads are rejected with the offending file line.
    """
    colmap = dict(zip(CSV_COLUMNS, CSV_COLUMNS))
    if schema:
        colmap.update(schema)
    by_pod: dict[str, list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: empty file")
        missing = [c for c in colmap.values() if c not in reader.fieldnames]
        if missing:
            raise ValidationError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            pod = row[colmap["pod_id"]]
            try:
                minutes = parse_dhh(row[colmap["timestamp"]])
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            try:
                load = float(row[colmap["active_load"]])
            except (TypeError, ValueError):
                raise ValidationError(
                    f"{path}:{lineno}: active_load {row[colmap['active_load']]!r} is not a number"
                ) from None
            if load < 0:
                raise ValidationError(f"{path}:{lineno}: negative load {load}")
            by_pod.setdefault(pod, []).append((minutes, load))
    if not by_pod:
        raise ValidationError(f"{path}: no data rows")
    out = []
    for pod in sorted(by_pod):
        rows = sorted(by_pod[pod])
        for (t0, _), (t1, _) in zip(rows, rows[1:]):
            if t0 == t1:
                raise ValidationError(f"{path}: duplicate timestamp {format_dhh(t0)} for pod {pod}")
        ts = np.array([t for t, _ in rows], dtype=np.int64)
        vals = np.array([v for _, v in rows], dtype=np.float64)
        out.append(energy_series(pod, ts, vals))
    return out


def write_csv(series_list: list[EnergySeries], path) -> int:
    """Write series in the ingestion format; returns the number of data rows."""
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for series in series_list:
            for t, v in zip(series.timestamps.tolist(), series.loads.tolist()):
                writer.writerow([series.pod_id, format_dhh(t), repr(v)])
                rows += 1
    return rows


# -------- synthetic PV generation --------

@dataclass(frozen=True)
class SyntheticPvConfig:
    n_nodes: int = 6
    days: int = 10
    peak_kw_range: tuple[float, float] = (2.0, 8.0)
    noise_std: float = 0.0
    cloud_event_rate: float = 0.25
    seed: int = 0
    start: str = "201501010000"  # first timestamp, yyyyMMddhhmm

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise ConfigError("n_nodes must be >= 1", field="data.synthetic.n_nodes")
        if self.days < 1:
            raise ConfigError("days must be >= 1", field="data.synthetic.days")
        lo, hi = self.peak_kw_range
        if not (0 < lo <= hi):
            raise ConfigError(
                "peak_kw_range must satisfy 0 < min <= max", field="data.synthetic.peak_kw_range"
            )
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0", field="data.synthetic.noise_std")
        if not 0 <= self.cloud_event_rate <= 1:
            raise ConfigError(
                "cloud_event_rate must be in [0, 1]", field="data.synthetic.cloud_event_rate"
            )


_SUNRISE_H = 6.0
_SUNSET_H = 18.0


def _clear_sky_day() -> np.ndarray:
    """Unit half-sine over daylight hours, zero at night; 96 quarter-hour slots."""
    hours = np.arange(READINGS_PER_DAY) * (STEP_MINUTES / 60.0)
    day = (hours > _SUNRISE_H) & (hours < _SUNSET_H)
    profile = np.zeros(READINGS_PER_DAY)
    profile[day] = np.sin(np.pi * (hours[day] - _SUNRISE_H) / (_SUNSET_H - _SUNRISE_H))
    return profile


def synthesize_pv(config: SyntheticPvConfig) -> list[EnergySeries]:
    """Generate one diurnal PV series per node, fully determined by the seed.

    Each node draws its own peak from peak_kw_range; days are a half-sine
    curve attenuated by occasional cloud events (a uniform factor on the
    whole day) plus Gaussian noise truncated at zero. Per-node RNG streams
    are independent, so node order never affects the output.
    """
    config.validate()
    shape = _clear_sky_day()
    start_minute = parse_dhh(config.start)
    out = []
    for i in range(config.n_nodes):
        pod_id = f"S_{i:06d}"
        rng = derive_rng(config.seed, "pv", pod_id)
        peak = rng.uniform(*config.peak_kw_range)
        days = []
        for _ in range(config.days):
            factor = 1.0
            if rng.uniform() < config.cloud_event_rate:
                factor = rng.uniform(0.2, 0.7)
            noise = rng.normal(0.0, config.noise_std, READINGS_PER_DAY)
            days.append(np.maximum(peak * factor * shape + noise, 0.0))
        loads = np.concatenate(days)
        ts = start_minute + STEP_MINUTES * np.arange(len(loads), dtype=np.int64)
        out.append(energy_series(pod_id, ts, loads))
    return out


# -------- normalization --------

def normalize_hourly(series: EnergySeries) -> EnergySeries:
    """Min-max rescale each reading within its own clock hour to [0, 1].

    An hour contributes only if all four quarter-hour readings are present;
    partial hours at segment edges are dropped, never padded. Hours with a
    constant value (typically zero-generation night hours) map to all zeros.
    """
    ts_parts, val_parts = [], []
    for start, stop in series.segments:
        seg_ts = series.timestamps[start:stop]
        seg_vals = series.loads[start:stop]
        # trim to whole clock hours: first reading at :00, last at :45
        offsets = (seg_ts // STEP_MINUTES) % READINGS_PER_HOUR
        first = np.flatnonzero(offsets == 0)
        last = np.flatnonzero(offsets == READINGS_PER_HOUR - 1)
        if len(first) == 0 or len(last) == 0 or first[0] > last[-1]:
            continue
        lo, hi = first[0], last[-1] + 1
        hours = seg_vals[lo:hi].reshape(-1, READINGS_PER_HOUR)
        mn = hours.min(axis=1, keepdims=True)
        mx = hours.max(axis=1, keepdims=True)
        span = mx - mn
        normed = np.where(span > 0, (hours - mn) / np.where(span > 0, span, 1.0), 0.0)
        ts_parts.append(seg_ts[lo:hi])
        val_parts.append(normed.reshape(-1))
    if not ts_parts:
        raise ValidationError(f"pod {series.pod_id}: no complete hour to normalize")
    return energy_series(series.pod_id, np.concatenate(ts_parts), np.concatenate(val_parts))


def normalize_global(series: EnergySeries) -> EnergySeries:
    """Min-max rescale over the whole series; keeps inter-hour amplitude."""
    mn = float(series.loads.min())
    mx = float(series.loads.max())
    if mx > mn:
        vals = (series.loads - mn) / (mx - mn)
    else:
        vals = np.zeros_like(series.loads)
    return energy_series(series.pod_id, series.timestamps.copy(), vals)


def normalize_series(series: EnergySeries, mode: str = "per_hour") -> EnergySeries:
    if mode == "per_hour":
        return normalize_hourly(series)
    if mode == "global":
        return normalize_global(series)
    raise ConfigError(f"unknown normalization mode {mode!r}", field="normalization")


# -------- windowing and partitioning --------

def make_windows(series: EnergySeries, seq_len: int, lead: int) -> tuple[np.ndarray, np.ndarray]:
    """Stride-1 sliding windows per contiguous segment.

    Returns (inputs, targets) with shapes (n, seq_len) and (n, lead); a
    segment of length L contributes max(0, L - seq_len - lead + 1) windows,
    and no window straddles a gap.
    """
    if seq_len < 1 or lead < 1:
        raise ConfigError("seq_len and lead must be >= 1")
    xs, ys = [], []
    width = seq_len + lead
    for start, stop in series.segments:
        if stop - start < width:
            continue
        view = np.lib.stride_tricks.sliding_window_view(series.loads[start:stop], width)
        xs.append(view[:, :seq_len])
        ys.append(view[:, seq_len:])
    if not xs:
        return (
            np.empty((0, seq_len), dtype=np.float64),
            np.empty((0, lead), dtype=np.float64),
        )
    return np.ascontiguousarray(np.vstack(xs)), np.ascontiguousarray(np.vstack(ys))


@dataclass
class NodeDataset:
    """One node's windows plus its chronological train/val/test index ranges."""

    node_id: str
    series: EnergySeries  # the node's own normalized series
    inputs: np.ndarray  # (n, seq_len)
    targets: np.ndarray  # (n, lead)
    train: tuple[int, int] = field(default=(0, 0))
    val: tuple[int, int] = field(default=(0, 0))
    test: tuple[int, int] = field(default=(0, 0))

    def __len__(self) -> int:
        return len(self.inputs)

    def _slice(self, rng: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        a, b = rng
        return self.inputs[a:b], self.targets[a:b]

    def split_xy(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        return self._slice(getattr(self, name))

    def split_count(self, name: str) -> int:
        a, b = getattr(self, name)
        return b - a


def split_ranges(n: int, fractions: tuple[float, float, float]) -> tuple[tuple[int, int], ...]:
    """Chronological (train, val, test) half-open ranges over n windows."""
    f_train, f_val, f_test = fractions
    if min(f_train, f_val, f_test) < 0 or abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise ConfigError("split fractions must be nonnegative and sum to 1", field="split")
    n_train = int(n * f_train)
    n_val = int(n * f_val)
    return (0, n_train), (n_train, n_train + n_val), (n_train + n_val, n)


def partition_cluster_data(
    series_by_node: dict[str, EnergySeries],
    ratios: dict[str, float],
    seq_len: int,
    lead: int,
    fractions: tuple[float, float, float] = (0.70, 0.15, 0.15),
) -> dict[str, NodeDataset]:
    """Deal the cluster's pooled windows out to nodes proportionally to ratios.

    All member series (already normalized) are windowed and concatenated in
    node-id order; node i receives floor(total * ratio_i / sum(ratios))
    consecutive windows, with the remainder going one each to the earliest
    node ids. Window counts are conserved exactly. Each node's share is then
    split chronologically into train/val/test.
    """
    node_ids = sorted(series_by_node)
    missing = [n for n in node_ids if n not in ratios]
    if missing:
        raise ConfigError(f"missing ratio for nodes {missing}", field="ratios")
    if any(ratios[n] <= 0 for n in node_ids):
        raise ConfigError("ratios must be positive", field="ratios")
    total_ratio = sum(ratios[n] for n in node_ids)
    if total_ratio <= 0:
        raise ConfigError("ratio sum must be positive", field="ratios")

    per_node = {n: make_windows(series_by_node[n], seq_len, lead) for n in node_ids}
    pool_x = np.vstack([per_node[n][0] for n in node_ids])
    pool_y = np.vstack([per_node[n][1] for n in node_ids])
    total = len(pool_x)

    quotas = {n: int(total * ratios[n] / total_ratio) for n in node_ids}
    remainder = total - sum(quotas.values())
    for n in node_ids[:remainder]:
        quotas[n] += 1

    out = {}
    cursor = 0
    for n in node_ids:
        take = quotas[n]
        x = pool_x[cursor : cursor + take]
        y = pool_y[cursor : cursor + take]
        cursor += take
        tr, va, te = split_ranges(take, fractions)
        out[n] = NodeDataset(
            node_id=n,
            series=series_by_node[n],
            inputs=x,
            targets=y,
            train=tr,
            val=va,
            test=te,
        )
    return out
