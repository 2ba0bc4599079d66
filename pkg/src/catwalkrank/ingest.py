"""Dataset loading: binary PGM frames, bounding boxes, judge scores.

Layout on disk::

    root/
      <year>/
        scores.csv                participant,score
        <participant>/
          bbox.csv                frame,x,y,w,h
          frames/
            0000.pgm ...          binary (P5) 8-bit grayscale

Every frame is cropped to its bounding box and resized to a fixed
person-centred window (100 rows x 50 columns by default) before any
feature is computed.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InsufficientFrames,
    InvalidArgument,
    ManifestError,
    ParseError,
    UnsupportedFormat,
)

__all__ = [
    "TARGET_SHAPE",
    "Video",
    "YearSet",
    "load_pgm",
    "write_pgm",
    "bilinear_resize",
    "load_bbox_csv",
    "load_scores_csv",
    "load_video",
    "iter_dataset",
    "load_dataset",
]

# rows x cols of the person window every cropped frame is resized to
TARGET_SHAPE = (100, 50)

_WS = (0x20, 0x09, 0x0A, 0x0D, 0x0B, 0x0C)


@dataclass
class Video:
    """Frames of one participant, already cropped and resized."""

    participant_id: str
    year: int
    frames: np.ndarray  # (T, rows, cols) float64 in [0, 255]

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float64)
        if f.ndim != 3:
            raise InvalidArgument(f"frames must be (T, rows, cols), got shape {f.shape}")
        if f.shape[0] < 2:
            raise InsufficientFrames(
                f"video {self.participant_id!r} has {f.shape[0]} frame(s), need at least 2"
            )
        self.frames = f

    @property
    def n_frames(self):
        return self.frames.shape[0]


@dataclass
class YearSet:
    """All participants of one competition year with their judge scores."""

    year: int
    participants: list = field(default_factory=list)  # [(Video, float score)]

    @property
    def ids(self):
        return [v.participant_id for v, _ in self.participants]

    @property
    def scores(self):
        return np.array([s for _, s in self.participants], dtype=np.float64)


def load_pgm(path):
    """Read a binary (P5) PGM with maxval 255 into a float64 array."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] != b"P5":
        raise ParseError(f"{path}: not a binary PGM (magic {data[:2]!r}, expected b'P5')")
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(data):
            raise ParseError(f"{path}: truncated header")
        c = data[pos]
        if c in _WS:
            pos += 1
        elif c == 0x23:  # '#' comment runs to end of line
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise ParseError(f"{path}: unterminated comment in header")
            pos = nl + 1
        elif 0x30 <= c <= 0x39:
            start = pos
            while pos < len(data) and 0x30 <= data[pos] <= 0x39:
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise ParseError(f"{path}: unexpected byte {data[pos:pos + 1]!r} in header")
    cols, rows, maxval = fields
    if rows <= 0 or cols <= 0:
        raise ParseError(f"{path}: bad dimensions {cols}x{rows}")
    if maxval != 255:
        raise UnsupportedFormat(f"{path}: maxval {maxval} not supported, expected 255")
    if pos >= len(data) or data[pos] not in _WS:
        raise ParseError(f"{path}: missing whitespace before raster")
    pos += 1
    raster = data[pos:]
    need = rows * cols
    if len(raster) < need:
        raise ParseError(f"{path}: raster has {len(raster)} bytes, expected {need}")
    if len(raster) > need:
        raise ParseError(f"{path}: {len(raster) - need} trailing byte(s) after raster")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(rows, cols)
    return img.astype(np.float64)


def write_pgm(path, frame):
    """Write a 2-D array in [0, 255] as a binary (P5) PGM, rounding to ints."""
    a = np.asarray(frame, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidArgument(f"frame must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or a.min() < 0 or a.max() > 255:
        raise InvalidArgument("frame values must be finite and within [0, 255]")
    rows, cols = a.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.rint(a).astype(np.uint8).tobytes())


def bilinear_resize(frame, rows, cols):
    """Resize with bilinear interpolation, sampling at output pixel centres."""
    a = np.asarray(frame, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidArgument(f"frame must be 2-D, got shape {a.shape}")
    if rows < 1 or cols < 1:
        raise InvalidArgument(f"target size must be positive, got {rows}x{cols}")
    in_r, in_c = a.shape
    ys = np.clip((np.arange(rows) + 0.5) * (in_r / rows) - 0.5, 0.0, in_r - 1.0)
    xs = np.clip((np.arange(cols) + 0.5) * (in_c / cols) - 0.5, 0.0, in_c - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_r - 1)
    x1 = np.minimum(x0 + 1, in_c - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = a[np.ix_(y0, x0)] * (1.0 - fx) + a[np.ix_(y0, x1)] * fx
    bot = a[np.ix_(y1, x0)] * (1.0 - fx) + a[np.ix_(y1, x1)] * fx
    return top * (1.0 - fy) + bot * fy


def _crop(frame, box, context):
    x, y, w, h = box
    rows, cols = frame.shape
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > cols or y + h > rows:
        raise ManifestError(
            f"{context}: box (x={x}, y={y}, w={w}, h={h}) outside {cols}x{rows} frame"
        )
    return frame[y:y + h, x:x + w]


def _read_csv_rows(path, header):
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows or [c.strip() for c in rows[0]] != header:
        raise ManifestError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def load_bbox_csv(path):
    """Per-frame bounding boxes keyed by frame file name."""
    boxes = {}
    for row in _read_csv_rows(path, ["frame", "x", "y", "w", "h"]):
        if len(row) != 5:
            raise ManifestError(f"{path}: bad row {row!r}")
        name = row[0].strip()
        try:
            x, y, w, h = (int(v) for v in row[1:])
        except ValueError:
            raise ManifestError(f"{path}: non-integer box in row {row!r}") from None
        if name in boxes:
            raise ManifestError(f"{path}: duplicate frame {name!r}")
        boxes[name] = (x, y, w, h)
    return boxes


def load_scores_csv(path):
    """Judge scores keyed by participant id; scores must lie in [0, 10]."""
    scores = {}
    for row in _read_csv_rows(path, ["participant", "score"]):
        if len(row) != 2:
            raise ManifestError(f"{path}: bad row {row!r}")
        pid = row[0].strip()
        try:
            s = float(row[1])
        except ValueError:
            raise ManifestError(f"{path}: non-numeric score in row {row!r}") from None
        if not np.isfinite(s) or not 0.0 <= s <= 10.0:
            raise ManifestError(f"{path}: score {s} for {pid!r} outside [0, 10]")
        if pid in scores:
            raise ManifestError(f"{path}: duplicate participant {pid!r}")
        scores[pid] = s
    return scores


def load_video(participant_dir, participant_id="", year=0, target=TARGET_SHAPE):
    """Load one participant directory: crop each frame to its box, resize.

    Frames are taken in sorted file-name order; every frame must have a
    bounding box entry.
    """
    pdir = Path(participant_dir)
    frames_dir = pdir / "frames"
    if not frames_dir.is_dir():
        raise ManifestError(f"missing directory: {frames_dir}")
    names = sorted(p.name for p in frames_dir.iterdir() if p.suffix == ".pgm")
    if len(names) < 2:
        raise InsufficientFrames(f"{frames_dir}: found {len(names)} frame(s), need at least 2")
    boxes = load_bbox_csv(pdir / "bbox.csv")
    out = np.empty((len(names),) + tuple(target), dtype=np.float64)
    for i, name in enumerate(names):
        if name not in boxes:
            raise ManifestError(f"{pdir / 'bbox.csv'}: no box for frame {name!r}")
        frame = load_pgm(frames_dir / name)
        out[i] = bilinear_resize(_crop(frame, boxes[name], f"{frames_dir / name}"), *target)
    return Video(participant_id=participant_id, year=year, frames=out)


def iter_dataset(root, target=TARGET_SHAPE):
    """Yield (year, participant_id, Video, score) lazily, years ascending
    and participants in sorted id order.

    Participant directories and scores.csv entries must match exactly and
    every year needs at least two participants.
    """
    root = Path(root)
    if not root.is_dir():
        raise ManifestError(f"dataset root {root} is not a directory")
    year_dirs = sorted(
        (int(p.name), p) for p in root.iterdir() if p.is_dir() and p.name.isdigit()
    )
    if not year_dirs:
        raise ManifestError(f"no year directories under {root}")
    for year, ydir in year_dirs:
        scores = load_scores_csv(ydir / "scores.csv")
        on_disk = sorted(p.name for p in ydir.iterdir() if p.is_dir())
        listed = sorted(scores)
        if on_disk != listed:
            raise ManifestError(
                f"{ydir}: scores.csv lists {listed} but directories are {on_disk}"
            )
        if len(on_disk) < 2:
            raise ManifestError(f"{ydir}: need at least 2 participants, found {len(on_disk)}")
        for pid in on_disk:
            yield year, pid, load_video(
                ydir / pid, participant_id=pid, year=year, target=target
            ), scores[pid]


def load_dataset(root, target=TARGET_SHAPE):
    """Load every year under `root` into memory, sorted by year."""
    years = {}
    for year, _, video, score in iter_dataset(root, target):
        years.setdefault(year, YearSet(year=year)).participants.append((video, score))
    return [years[y] for y in sorted(years)]
