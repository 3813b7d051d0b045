"""Read a message back from an image of a plate or a hinge."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..codec import Parse, TritString, parse_candidates
from ..errors import (
    AmbiguousAnchor,
    AmbiguousScene,
    CodecError,
    DecodeError,
    DecodeFailed,
    ImageError,
    NoAnchorFound,
    NoCandidates,
)
from ..imgproc import as_gray
from .classify import classify_candidates, classify_joint_sides, classify_lengths
from .hinge import HingeCandidate, locate_hinge, measure_links, rectify_hinge
from ..model import SIDES
from .joints import (
    JointMeasurement,
    PlateCandidate,
    RectifiedPlate,
    iter_plate_candidates,
    locate_plate,
    measure_joint_elements,
    rectify_plate,
)

SCHEMA = "structcode/1"

__all__ = [
    "DecodeReport", "decode_joints", "decode_hinge", "decode_auto", "decode_image",
    "classify_lengths", "classify_candidates", "classify_joint_sides",
    "locate_plate", "rectify_plate", "measure_joint_elements", "read_joint_sides",
    "locate_hinge", "rectify_hinge", "measure_links",
    "PlateCandidate", "RectifiedPlate", "JointMeasurement", "HingeCandidate",
]


@dataclass
class DecodeReport:
    message: str
    kind: str
    quad: np.ndarray
    lengths: tuple[float, ...]
    trits: tuple[int, ...]
    anchor_offset: int
    reversed: bool = False
    diagnostics: list[str] = field(default_factory=list)
    timings_ms: dict[str, float] = field(default_factory=dict)

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "schema": SCHEMA,
            "message": self.message,
            "kind": self.kind,
            "quad": [[round(float(x), 2), round(float(y), 2)] for x, y in self.quad],
            "lengths_px": [round(float(v), 3) for v in self.lengths],
            "trits": "".join(str(t) for t in self.trits),
            "anchor_offset": int(self.anchor_offset),
            "reversed": bool(self.reversed),
            "diagnostics": list(self.diagnostics),
        }
        if timings:
            out["timings_ms"] = {k: round(v, 1) for k, v in self.timings_ms.items()}
        return out

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), ensure_ascii=False)


class _Clock:
    def __init__(self):
        self.t = time.perf_counter()
        self.laps: dict[str, float] = {}

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        self.laps[name] = self.laps.get(name, 0.0) + 1000.0 * (now - self.t)
        self.t = now


def _rank(p: Parse):
    return (-p.support, -p.tail, p.reversed)


def _best_parse(trits, circular: bool, starts=None, reverse_starts=None) -> Parse:
    """Best supported reading: whole copies, then the partial tail, then forward first."""
    found = parse_candidates(TritString(trits, circular=circular), circular=circular,
                             starts=starts, reverse_starts=reverse_starts)
    if not found:
        raise NoAnchorFound("no anchored, self-consistent parse")
    found.sort(key=_rank)
    top = found[0]
    rivals = {p.message for p in found if _rank(p) == _rank(top)}
    if len(rivals) > 1:
        raise AmbiguousAnchor(f"stream parses as {sorted(rivals)!r}")
    return top


def _first_parse(hypotheses, circular: bool, starts=None, reverse_starts=None):
    """Best parse over all trit hypotheses; earlier hypotheses win ties in support.

    Returns ``(trits, parse, rivals)`` where ``rivals`` counts other messages
    read with the same support.
    """
    found, last = [], None
    for trits in hypotheses:
        try:
            found.append((trits, _best_parse(trits, circular, starts, reverse_starts)))
        except CodecError as exc:
            last = exc
    if not found:
        raise DecodeFailed(f"no trit reading parses: {last}")
    top = max((p.support, p.tail) for _, p in found)
    best = next(f for f in found if (f[1].support, f[1].tail) == top)
    rivals = {p.message for _, p in found if (p.support, p.tail) == top} - {best[1].message}
    return best[0], best[1], len(rivals)


def _side_bounds(sides) -> tuple[set[int], set[int]]:
    """Indices where a perimeter reading may begin, forward and backward."""
    starts, ends, pos = set(), set(), 0
    for s in sides:
        if len(s):
            starts.add(pos)
            pos += len(s)
            ends.add(pos - 1)
    return starts, ends


def read_joint_sides(side_lengths, seed: int = 0) -> tuple[tuple[int, ...], Parse, int]:
    """Trits, parse and rival count for per-side element lengths in reading order."""
    sides = [tuple(s) for s in side_lengths]
    hyps = classify_joint_sides(sides, seed=seed)
    return _first_parse(hyps, True, *_side_bounds(sides))


def decode_joints(img, seed: int = 0) -> DecodeReport:
    """Locate, rectify and measure plates until one perimeter parses."""
    img = as_gray(img)
    clock = _Clock()
    notes: list[str] = []
    tried = 0
    for cand in iter_plate_candidates(img, seed=seed):
        tried += 1
        clock.lap("locate")
        try:
            rp = rectify_plate(img, cand)
            clock.lap("rectify")
            m = measure_joint_elements(rp)
            clock.lap("measure")
            trits, parse, rivals = read_joint_sides([m.sides[s] for s in SIDES], seed)
            clock.lap("classify")
        except (DecodeError, CodecError, ImageError) as exc:
            notes.append(f"candidate {tried}: {type(exc).__name__}: {exc}")
            clock.lap("rejected")
            continue
        notes.extend(rp.notes)
        if rivals:
            notes.append(f"{rivals} other reading(s) parse equally well")
        return DecodeReport(parse.message, "joints", rp.quad, m.lengths, trits, parse.offset,
                            parse.reversed, notes, clock.laps)
    if tried == 0:
        raise NoCandidates("no plate-like regions found")
    raise DecodeFailed("no plate candidate decoded; " + "; ".join(notes[-3:]))


def decode_hinge(img, seed: int = 0) -> DecodeReport:
    """Locate hinges and read their link lengths column by column."""
    img = as_gray(img)
    clock = _Clock()
    cands = locate_hinge(img)
    clock.lap("locate")
    notes: list[str] = []
    for i, cand in enumerate(cands, start=1):
        try:
            rect, _ = rectify_hinge(img, cand)
            clock.lap("rectify")
            hm = measure_links(rect)
            clock.lap("measure")
            hyps = classify_candidates(hm.lengths, seed=seed)
            trits, parse, rivals = _first_parse(hyps, circular=False)
            clock.lap("classify")
        except (DecodeError, CodecError, ImageError) as exc:
            notes.append(f"hinge {i}: {type(exc).__name__}: {exc}")
            clock.lap("rejected")
            continue
        notes.append(f"{cand.n_cuts} cuts in {len(hm.columns)} columns")
        if rivals:
            notes.append(f"{rivals} other reading(s) parse equally well")
        return DecodeReport(parse.message, "hinge", cand.quad, hm.lengths, trits, parse.offset,
                            parse.reversed, notes, clock.laps)
    raise DecodeFailed("no hinge candidate decoded; " + "; ".join(notes[-3:]))


def decode_auto(img, seed: int = 0) -> DecodeReport:
    """Run both pipelines; the unique successful report wins."""
    reports, errors = [], []
    for fn in (decode_joints, decode_hinge):
        try:
            reports.append(fn(img, seed=seed))
        except (DecodeError, CodecError) as exc:
            errors.append(f"{fn.__name__}: {exc}")
    if not reports:
        raise DecodeFailed("; ".join(errors))
    if len(reports) == 2 and reports[0].message != reports[1].message:
        raise AmbiguousScene(
            f"joints read {reports[0].message!r} but hinge read {reports[1].message!r}")
    return reports[0]


PIPELINES = {"joints": decode_joints, "hinge": decode_hinge, "auto": decode_auto}


def decode_image(img, pipeline: str = "auto", seed: int = 0) -> DecodeReport:
    try:
        fn = PIPELINES[pipeline]
    except KeyError:
        raise ValueError(f"unknown pipeline {pipeline!r}") from None
    return fn(img, seed=seed)
