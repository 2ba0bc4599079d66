"""Deterministic synthetic catwalk dataset generator.

Each participant is an articulated bright figure (gaussian torso and head,
capsule limbs swinging with a periodic gait) translating across a black
100x50 canvas.  A latent quality q ~ Uniform(0,1) controls how cleanly it
walks: vertical jitter, per-frame speed variance and gait-phase noise all
scale with (1 - q), so motion-derivative statistics carry the ranking
signal.  The judge score is 10*q plus optional gaussian noise, rounded to
two decimals and clipped to [0, 10].

Every random draw comes from a per-participant generator seeded with
(seed, year, participant index), so trees are byte-identical across runs
and participants can be rendered in parallel.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .ingest import write_pgm

__all__ = ["CANVAS_SHAPE", "SynthConfig", "render_walker", "quality_score", "generate"]

# rows x cols of every rendered frame (matches the ingest crop target)
CANVAS_SHAPE = (100, 50)

_GAIT_PERIOD = 16.0  # frames per stride cycle


@dataclass
class SynthConfig:
    years: int = 5
    participants: int = 10
    frames: int = 60
    score_noise: float = 0.2
    jitter: float = 1.0
    seed: int = 0
    start_year: int = 2001

    def __post_init__(self):
        if self.years < 1:
            raise InvalidArgument(f"years must be >= 1, got {self.years}")
        if self.participants < 2:
            raise InvalidArgument(f"participants must be >= 2, got {self.participants}")
        if self.frames < 2:
            raise InvalidArgument(f"frames must be >= 2, got {self.frames}")
        if self.score_noise < 0:
            raise InvalidArgument(f"score_noise must be >= 0, got {self.score_noise}")
        if self.jitter < 0:
            raise InvalidArgument(f"jitter must be >= 0, got {self.jitter}")


def _ellipse(yy, xx, cx, cy, sx, sy):
    return np.exp(-((xx - cx) ** 2 / (2.0 * sx ** 2) + (yy - cy) ** 2 / (2.0 * sy ** 2)))


def _capsule(yy, xx, x0, y0, x1, y1, width):
    """Gaussian falloff around the segment (x0,y0)-(x1,y1)."""
    dx = x1 - x0
    dy = y1 - y0
    norm2 = max(dx * dx + dy * dy, 1e-12)
    t = np.clip(((xx - x0) * dx + (yy - y0) * dy) / norm2, 0.0, 1.0)
    d2 = (xx - (x0 + t * dx)) ** 2 + (yy - (y0 + t * dy)) ** 2
    return np.exp(-d2 / (2.0 * width ** 2))


def _paint(xc, yc, phase):
    yy, xx = np.ogrid[0.0:CANVAS_SHAPE[0], 0.0:CANVAS_SHAPE[1]]
    img = 235.0 * _ellipse(yy, xx, xc, yc, 3.2, 8.5)
    img = np.maximum(img, 235.0 * _ellipse(yy, xx, xc, yc - 12.5, 2.8, 2.8))
    hip_y = yc + 7.0
    leg = 0.5 * np.sin(phase)
    for sgn in (1.0, -1.0):
        a = sgn * leg
        img = np.maximum(img, 220.0 * _capsule(
            yy, xx, xc, hip_y, xc + 20.0 * np.sin(a), hip_y + 20.0 * np.cos(a), 1.7))
    shoulder_y = yc - 5.0
    arm = 0.35 * np.sin(phase + np.pi)
    for sgn in (1.0, -1.0):
        a = sgn * arm
        img = np.maximum(img, 210.0 * _capsule(
            yy, xx, xc, shoulder_y, xc + 13.0 * np.sin(a), shoulder_y + 13.0 * np.cos(a), 1.3))
    return np.clip(img, 0.0, 255.0)


def render_walker(quality, frames, jitter, rng):
    """Frames of one walker; quality 1 gives an exactly constant-velocity,
    jitter-free trajectory, quality 0 the noisiest one."""
    speed_sigma = 0.9 * jitter * (1.0 - quality)
    vert_amp = 2.5 * jitter * (1.0 - quality)
    phase_sigma = 0.45 * jitter * (1.0 - quality)
    phi0 = rng.uniform(0.0, 2.0 * np.pi)
    speed_noise = rng.standard_normal(frames - 1)
    vert_noise = rng.standard_normal(frames)
    phase_noise = rng.standard_normal(frames)

    base_step = 28.0 / (frames - 1)
    xs = np.concatenate(([11.0], 11.0 + np.cumsum(base_step * (1.0 + speed_sigma * speed_noise))))
    xs = np.clip(xs, 8.0, 42.0)
    ys = 45.0 + vert_amp * vert_noise
    phases = phi0 + 2.0 * np.pi / _GAIT_PERIOD * np.arange(frames) + np.cumsum(phase_sigma * phase_noise)

    out = np.empty((frames,) + CANVAS_SHAPE)
    for t in range(frames):
        out[t] = _paint(xs[t], ys[t], phases[t])
    return out


def quality_score(quality, noise_sigma, rng):
    """Judge score for a quality draw: 10*q plus gaussian noise, rounded
    to 2 decimals, clipped to [0, 10]."""
    noise = noise_sigma * rng.normal() if noise_sigma > 0 else 0.0
    return float(np.clip(np.round(10.0 * quality + noise, 2), 0.0, 10.0))


def generate(cfg, out_root):
    """Write an ingest-compatible dataset tree under `out_root`."""
    root = Path(out_root)
    root.mkdir(parents=True, exist_ok=True)
    rows, cols = CANVAS_SHAPE
    for yi in range(cfg.years):
        year = cfg.start_year + yi
        ydir = root / str(year)
        scores = {}
        for pidx in range(cfg.participants):
            pid = f"p{pidx:03d}"
            rng = np.random.default_rng([cfg.seed, year, pidx])
            quality = rng.uniform()
            scores[pid] = quality_score(quality, cfg.score_noise, rng)
            frames = render_walker(quality, cfg.frames, cfg.jitter, rng)
            frames_dir = ydir / pid / "frames"
            frames_dir.mkdir(parents=True, exist_ok=True)
            bbox_lines = ["frame,x,y,w,h"]
            for t in range(cfg.frames):
                name = f"{t:04d}.pgm"
                write_pgm(frames_dir / name, frames[t])
                bbox_lines.append(f"{name},0,0,{cols},{rows}")
            (ydir / pid / "bbox.csv").write_text("\n".join(bbox_lines) + "\n", encoding="utf-8")
        score_lines = ["participant,score"]
        score_lines.extend(f"{pid},{scores[pid]:.2f}" for pid in sorted(scores))
        (ydir / "scores.csv").write_text("\n".join(score_lines) + "\n", encoding="utf-8")
