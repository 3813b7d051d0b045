"""Embed -> render -> decode trials for success-rate sweeps."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codec import DEFAULT_TABLE, capacity_chars
from .decode import decode_image
from .embedder import embed_message
from .errors import CodecError, DecodeError, EmbedError, ImageError, UnknownStructure
from .model import Design, joint_model
from .render import RenderConfig, render


def structure_kind(design: Design, structure_id: str) -> tuple[str, int]:
    """``("hinge" | "joints", n_elements)`` for a structure id."""
    for h in design.hinges:
        if h.id == structure_id:
            return "hinge", h.n_elements
    try:
        plate = design.plate(structure_id)
    except KeyError:
        raise UnknownStructure(f"no structure {structure_id!r}") from None
    model = joint_model(plate)
    if model is None:
        raise UnknownStructure(f"plate {structure_id!r} has no finger joints")
    return "joints", sum(len(v[0]) for v in model.sides.values() if v is not None)


def structures(design: Design) -> list[str]:
    ids = [p.id for p in design.plates if joint_model(p) is not None]
    return ids + [h.id for h in design.hinges]


def random_message(rng: np.random.Generator, max_chars: int, chars: str | None = None) -> str:
    chars = chars or DEFAULT_TABLE.chars
    n = int(rng.integers(1, max_chars + 1))
    return "".join(chars[int(i)] for i in rng.integers(0, len(chars), n))


@dataclass(frozen=True)
class Trial:
    message: str
    decoded: str | None
    error: str | None
    seconds: float

    @property
    def ok(self) -> bool:
        return self.decoded == self.message


def embed_random(design: Design, structure_id: str, rng: np.random.Generator,
                 attempts: int = 20) -> tuple[Design, str]:
    """Embed a random message that fits; infeasible draws are redrawn."""
    _, n = structure_kind(design, structure_id)
    cap = capacity_chars(n)
    last = None
    for _ in range(attempts):
        msg = random_message(rng, cap)
        try:
            return embed_message(design, structure_id, msg)[0], msg
        except EmbedError as exc:
            last = exc
    raise last


def run_trial(design: Design, message: str, cfg: RenderConfig, pipeline: str) -> Trial:
    img = render(design, cfg)
    t0 = time.perf_counter()
    try:
        got = decode_image(img, pipeline, seed=0).message
        err = None
    except (DecodeError, CodecError, ImageError) as exc:
        got, err = None, f"{type(exc).__name__}: {exc}"
    return Trial(message, got, err, time.perf_counter() - t0)


@dataclass(frozen=True)
class Cell:
    axis: str
    angle: float
    trials: tuple[Trial, ...]

    @property
    def rate(self) -> float:
        return sum(t.ok for t in self.trials) / len(self.trials) if self.trials else 0.0

    @property
    def median_seconds(self) -> float:
        return float(np.median([t.seconds for t in self.trials])) if self.trials else 0.0


def sweep(design: Design, structure_id: str, angles: Sequence[float], axis: str = "yaw",
          trials: int = 10, seed: int = 0, base: RenderConfig = RenderConfig(),
          pipeline: str | None = None) -> list[Cell]:
    """Success rate per viewing angle; trial ``i`` (from 0) uses render seed ``seed + i + 1``."""
    if axis not in ("yaw", "pitch"):
        raise ValueError("axis must be yaw or pitch")
    kind, _ = structure_kind(design, structure_id)
    pipeline = pipeline or kind
    rng = np.random.default_rng(seed)
    cases = [embed_random(design, structure_id, rng) for _ in range(trials)]
    cells = []
    for angle in angles:
        out = []
        for i, (embedded, msg) in enumerate(cases):
            cfg = base.with_(seed=seed + i + 1, **{axis: float(angle)})
            out.append(run_trial(embedded, msg, cfg, pipeline))
        cells.append(Cell(axis, float(angle), tuple(out)))
    return cells
