"""Drive-log ingestion: CSV parsing, 1-second interval aggregation, and map assembly.

A training drive log is a CSV of per-frame pedestrian detections tagged with the
ego vehicle's GPS fix. Records are grouped per clip into fixed wall-clock
1-second bins; each bin with at least one detected pedestrian becomes a hotspot
node at the median vehicle position. Maps from separate drives or vehicles are
merged by plain node-list concatenation: repeated sightings of the same spot are
the signal, so nothing is deduplicated.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from io import TextIOWrapper
from typing import IO, Iterable, Literal, Optional, Union

from .geodesy import GeoPoint
from .spatial_index import DEFAULT_LEAF_SIZE, BallTree

MAP_SCHEMA_VERSION = 1

TRAINING_HEADER = ["timestamp", "latitude", "longitude", "pedestrian_count", "clip_id"]

CountMode = Literal["max", "sum"]


class ParseError(ValueError):
    """A malformed input file; carries the 1-based line number where parsing failed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True, slots=True)
class DetectionRecord:
    """One annotated frame: where the vehicle was and how many pedestrians it saw."""

    timestamp_ms: int
    position: GeoPoint
    pedestrian_count: int
    clip_id: str

    def __post_init__(self) -> None:
        if self.pedestrian_count < 0:
            raise ValueError("pedestrian_count must be >= 0")


@dataclass(frozen=True, slots=True)
class Interval:
    """All fixes of one clip falling inside a single 1-second wall-clock bin."""

    index: int  # epoch second (start_ms // 1000)
    clip_id: str
    start_ms: int
    end_ms: int
    fixes: tuple[GeoPoint, ...]
    counts: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class HotspotNode:
    """Median vehicle position of an interval plus the pedestrian count seen there."""

    position: GeoPoint
    count: int
    timestamp_ms: int
    clip_id: str

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("hotspot nodes require count >= 1")


@dataclass
class HotspotMap:
    """The trained artifact: hotspot nodes plus a lazily built ball-tree index.

    Treat a completed map as immutable; concurrent readers may share it freely.
    """

    nodes: list[HotspotNode] = field(default_factory=list)
    _index: Optional[BallTree] = field(default=None, repr=False, compare=False)

    @property
    def index(self) -> BallTree:
        if self._index is None:
            self.build_spatial_index()
        return self._index

    def build_spatial_index(self, leaf_size: int = DEFAULT_LEAF_SIZE) -> BallTree:
        self._index = BallTree([n.position for n in self.nodes], leaf_size=leaf_size)
        return self._index

    def __len__(self) -> int:
        return len(self.nodes)


def _open_text(source: Union[IO[bytes], IO[str], Iterable[str]]) -> Iterable[str]:
    if hasattr(source, "read") and isinstance(source.read(0), bytes):  # type: ignore[union-attr]
        return TextIOWrapper(source, encoding="utf-8", newline="")  # type: ignore[arg-type]
    return source  # already text


def _parse_latlon(lat_text: str, lon_text: str, line: int) -> GeoPoint:
    try:
        lat = float(lat_text)
        lon = float(lon_text)
    except ValueError:
        raise ParseError(f"non-numeric coordinate {lat_text!r},{lon_text!r}", line) from None
    if not -90.0 <= lat <= 90.0:
        raise ParseError(f"latitude {lat} outside [-90, 90]", line)
    if not -180.0 <= lon <= 180.0:
        raise ParseError(f"longitude {lon} outside [-180, 180]", line)
    return GeoPoint(lat, lon)


def _parse_int(text: str, what: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"non-integer {what} {text!r}", line) from None


def parse_detection_log(source: Union[IO[bytes], IO[str], Iterable[str]]) -> list[DetectionRecord]:
    """Parse a training CSV into records sorted by (clip_id, timestamp).

    The header must be exactly ``timestamp,latitude,longitude,pedestrian_count,clip_id``.
    Raises ParseError (with line number) on any malformed or out-of-range row.
    """
    reader = csv.reader(_open_text(source))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header row", 1) from None
    if header != TRAINING_HEADER:
        raise ParseError(f"bad header {header!r}, expected {TRAINING_HEADER!r}", 1)
    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", line)
        ts = _parse_int(row[0], "timestamp", line)
        position = _parse_latlon(row[1], row[2], line)
        count = _parse_int(row[3], "pedestrian_count", line)
        if count < 0:
            raise ParseError(f"negative pedestrian_count {count}", line)
        records.append(DetectionRecord(ts, position, count, row[4]))
    records.sort(key=lambda r: (r.clip_id, r.timestamp_ms))
    return records


def split_intervals(records: list[DetectionRecord]) -> list[Interval]:
    """Split records into per-clip 1-second intervals aligned to wall-clock seconds.

    Expects records sorted by (clip_id, timestamp); every record lands in exactly
    one interval, and intervals never span clips.
    """
    intervals: list[Interval] = []
    fixes: list[GeoPoint] = []
    counts: list[int] = []
    current: Optional[tuple[str, int]] = None  # (clip_id, epoch second)

    def flush() -> None:
        if current is not None:
            clip, sec = current
            intervals.append(
                Interval(sec, clip, sec * 1000, sec * 1000 + 1000, tuple(fixes), tuple(counts))
            )

    for rec in records:
        key = (rec.clip_id, rec.timestamp_ms // 1000)
        if key != current:
            flush()
            current = key
            fixes = []
            counts = []
        fixes.append(rec.position)
        counts.append(rec.pedestrian_count)
    flush()
    return intervals


def aggregate_interval(interval: Interval, count_mode: CountMode = "max") -> Optional[HotspotNode]:
    """Collapse an interval to a hotspot node, or None when no pedestrian was seen.

    The position is the component-wise median of the interval's fixes (an even
    number of fixes averages the two middle values per component). The count is
    the max of the per-fix counts by default; ``sum`` adds them instead, which
    over-counts pedestrians that stay in view across frames.
    """
    if count_mode not in ("max", "sum"):
        raise ValueError(f"count_mode must be 'max' or 'sum', got {count_mode!r}")
    count = max(interval.counts) if count_mode == "max" else sum(interval.counts)
    if count == 0:
        return None
    position = GeoPoint(
        statistics.median(p.lat for p in interval.fixes),
        statistics.median(p.lon for p in interval.fixes),
    )
    return HotspotNode(position, count, interval.start_ms, interval.clip_id)


def build_map(records: list[DetectionRecord], count_mode: CountMode = "max") -> HotspotMap:
    """Aggregate records into a hotspot map, ordered by clip then interval start."""
    records = sorted(records, key=lambda r: (r.clip_id, r.timestamp_ms))
    nodes = []
    for interval in split_intervals(records):
        node = aggregate_interval(interval, count_mode)
        if node is not None:
            nodes.append(node)
    return HotspotMap(nodes)


def merge_maps(a: HotspotMap, b: HotspotMap) -> HotspotMap:
    """Multiset union of two maps' nodes; the result's index is rebuilt lazily."""
    return HotspotMap(a.nodes + b.nodes)


# --- serialization ---------------------------------------------------------


def map_to_dict(hotspot_map: HotspotMap) -> dict:
    return {
        "schema_version": MAP_SCHEMA_VERSION,
        "nodes": [
            {
                "lat": n.position.lat,
                "lon": n.position.lon,
                "count": n.count,
                "timestamp_ms": n.timestamp_ms,
                "clip_id": n.clip_id,
            }
            for n in hotspot_map.nodes
        ],
    }


def map_from_dict(data: dict) -> HotspotMap:
    version = data.get("schema_version")
    if version != MAP_SCHEMA_VERSION:
        raise ValueError(f"unsupported map schema_version {version!r}")
    nodes = [
        HotspotNode(GeoPoint(n["lat"], n["lon"]), n["count"], n["timestamp_ms"], n["clip_id"])
        for n in data["nodes"]
    ]
    return HotspotMap(nodes)


def save_map(hotspot_map: HotspotMap, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(map_to_dict(hotspot_map), f, indent=2)
        f.write("\n")


def load_map(path: str) -> HotspotMap:
    with open(path, "r", encoding="utf-8") as f:
        return map_from_dict(json.load(f))


def map_to_geojson(hotspot_map: HotspotMap) -> dict:
    """GeoJSON FeatureCollection of Point features; coordinates are [lon, lat]."""
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [n.position.lon, n.position.lat]},
                "properties": {
                    "count": n.count,
                    "timestamp_ms": n.timestamp_ms,
                    "clip_id": n.clip_id,
                },
            }
            for n in hotspot_map.nodes
        ],
    }


def map_from_geojson(data: dict) -> HotspotMap:
    """Rebuild a map from its GeoJSON export (the inverse of ``map_to_geojson``)."""
    if data.get("type") != "FeatureCollection":
        raise ValueError("expected a GeoJSON FeatureCollection")
    nodes = []
    for feature in data["features"]:
        lon, lat = feature["geometry"]["coordinates"]
        props = feature["properties"]
        nodes.append(HotspotNode(GeoPoint(lat, lon), props["count"], props["timestamp_ms"], props["clip_id"]))
    return HotspotMap(nodes)
