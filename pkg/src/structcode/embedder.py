"""Rewrite design geometry so element lengths carry a trit string.

Every encoded element is ``d + trit * delta_d`` long. Finger joints solve
``d`` per side so that each side keeps its length; hinges use one ``d`` for
the whole region and absorb the change in the cut lengths of each column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .codec import TritString
from .errors import (
    CapacityExceeded,
    EmbedError,
    Infeasible,
    MissingNeighborGeometry,
    UnknownStructure,
)
from .model import (
    ALPHA_HINGE,
    ALPHA_JOINTS,
    FINGER,
    GAP,
    SIDES,
    Column,
    Design,
    HingeRegion,
    build_outline,
    joint_model,
)

MIN_FEATURE = 1.0


@dataclass(frozen=True)
class EmbedPlan:
    target: str
    trits: tuple[int, ...]
    delta_d: float
    base_widths: tuple[float, ...]  # one per side for joints, one for hinges


def compute_delta_d(w: float, alpha: float) -> float:
    if w <= 0 or alpha <= 0:
        raise ValueError("w and alpha must be positive")
    return w / alpha


def solve_base_width(L: float, counts: Sequence[int], delta_d: float,
                     min_feature: float = MIN_FEATURE) -> float:
    """Base width ``d`` with ``n*d + (n1 + 2*n2)*delta_d == L``."""
    n0, n1, n2 = counts
    n = n0 + n1 + n2
    if n < 1:
        raise ValueError("no elements to size")
    d = (L - (n1 + 2 * n2) * delta_d) / n
    if d <= min_feature:
        raise Infeasible(f"base width {d:.4g} mm is not above the {min_feature} mm minimum feature")
    return d


def check_curvature(d: float, delta_d: float, dist_center: float, dist_edge: float) -> bool:
    """True when curvature cannot make a narrower element look like the next level."""
    if dist_center <= 0 or dist_edge <= 0:
        raise ValueError("distances must be positive")
    return delta_d > curvature_threshold(d, dist_center, dist_edge)


def curvature_threshold(d: float, dist_center: float, dist_edge: float) -> float:
    return d * (dist_edge / dist_center - 1.0)


def _counts(trits) -> tuple[int, int, int]:
    return (trits.count(0), trits.count(1), trits.count(2))


def _check_fits(ts: TritString, n: int) -> tuple[int, ...]:
    if len(ts) == 0:
        raise ValueError("empty trit string")
    if len(ts) > n:
        raise CapacityExceeded(f"{len(ts)} trits do not fit in {n} elements")
    return ts.tiled(n)


def plan_joint_perimeter(design: Design, plate_id: str, ts: TritString,
                         alpha: float = ALPHA_JOINTS, delta_d: float | None = None,
                         min_feature: float = MIN_FEATURE):
    plate = _plate(design, plate_id)
    model = joint_model(plate)
    if model is None:
        raise UnknownStructure(f"plate {plate_id!r} has no finger joints")
    jointed = [s for s in SIDES if model.sides[s] is not None]
    n = sum(len(model.sides[s][0]) for s in jointed)
    trits = _check_fits(ts, n)
    if delta_d is None:
        delta_d = compute_delta_d(plate.longest, alpha)
    new_sides = dict(model.sides)
    bases = []
    pos = 0
    for s in jointed:
        kinds, widths = model.sides[s]
        chunk = trits[pos:pos + len(kinds)]
        pos += len(kinds)
        d = solve_base_width(sum(widths), _counts(chunk), delta_d, min_feature)
        bases.append(d)
        new_sides[s] = (kinds, tuple(d + t * delta_d for t in chunk))
    return model, new_sides, EmbedPlan(plate_id, trits, delta_d, tuple(bases))


def embed_joint_perimeter(design: Design, plate_id: str, ts: TritString,
                          alpha: float = ALPHA_JOINTS, delta_d: float | None = None,
                          min_feature: float = MIN_FEATURE) -> Design:
    """Encode ``ts`` around a plate's jointed perimeter, counter-clockwise.

    The string is repeated to cover every element. Mating edges of declared
    neighbours are rewritten as complements so the plates still interlock.
    """
    return embed_joint_perimeter_plan(design, plate_id, ts, alpha, delta_d, min_feature)[0]


def embed_joint_perimeter_plan(design, plate_id, ts, alpha=ALPHA_JOINTS, delta_d=None,
                               min_feature=MIN_FEATURE) -> tuple[Design, EmbedPlan]:
    plate = _plate(design, plate_id)
    model, new_sides, plan = plan_joint_perimeter(design, plate_id, ts, alpha, delta_d, min_feature)

    updates = {}
    for side, (other_id, other_side) in plate.neighbors.items():
        if model.sides.get(side) is None:
            continue
        try:
            other = design.plate(other_id)
        except KeyError:
            raise MissingNeighborGeometry(f"neighbour plate {other_id!r} not in design") from None
        omodel = updates[other_id][0] if other_id in updates else joint_model(other)
        ospec = None if omodel is None else omodel.sides.get(other_side)
        kinds, widths = model.sides[side]
        if ospec is None or len(ospec[0]) != len(kinds):
            raise MissingNeighborGeometry(
                f"{other_id}:{other_side} has no matching joint edge for {plate_id}:{side}")
        flipped = tuple(GAP if k == FINGER else FINGER for k in reversed(kinds))
        if ospec[0] != flipped or not math.isclose(sum(ospec[1]), sum(widths), abs_tol=1e-6):
            raise MissingNeighborGeometry(
                f"{other_id}:{other_side} is not the complement of {plate_id}:{side}")
        osides = dict(omodel.sides)
        osides[other_side] = (ospec[0], tuple(reversed(new_sides[side][1])))
        updates[other_id] = (omodel._replace(sides=osides), other)

    out = design.replace_plate(
        replace(plate, outline=tuple(build_outline(model.rect, model.thickness, new_sides))))
    for omodel, other in updates.values():
        out = out.replace_plate(
            replace(other, outline=tuple(build_outline(omodel.rect, omodel.thickness, omodel.sides))))
    return out, plan


def embed_hinge(design: Design, hinge_id: str, ts: TritString, alpha: float = ALPHA_HINGE,
                delta_d: float | None = None, min_feature: float = MIN_FEATURE) -> Design:
    """Encode ``ts`` in a hinge's link lengths, column by column, top to bottom."""
    return embed_hinge_plan(design, hinge_id, ts, alpha, delta_d, min_feature)[0]


def embed_hinge_plan(design, hinge_id, ts, alpha=ALPHA_HINGE, delta_d=None,
                     min_feature=MIN_FEATURE) -> tuple[Design, EmbedPlan]:
    try:
        region = design.hinge(hinge_id)
    except KeyError:
        raise UnknownStructure(f"no hinge {hinge_id!r}") from None
    links = region.links
    trits = _check_fits(ts, len(links))
    if delta_d is None:
        delta_d = compute_delta_d(region.longest, alpha)
    d = sum(links) / len(links) - delta_d * (sum(trits) / len(trits))
    if d <= min_feature:
        raise Infeasible(f"base link {d:.4g} mm is not above the {min_feature} mm minimum feature")

    new_columns = []
    pos = 0
    for col in region.columns:
        m = len(col.cuts)
        k = m - 1
        new_links = [d + t * delta_d for t in trits[pos:pos + k]]
        pos += k
        cut_total = col.span - sum(new_links)
        shift = (cut_total - sum(b - a for a, b in col.cuts)) / m
        cut_lengths = [(b - a) + shift for a, b in col.cuts]
        if min(cut_lengths) <= min_feature:
            raise Infeasible(f"column at {col.perp:.3f} mm leaves a cut of {min(cut_lengths):.4g} mm")
        spans = []
        y = col.cuts[0][0]
        for j, c in enumerate(cut_lengths):
            end = col.cuts[-1][1] if j == m - 1 else y + c
            spans.append((y, end))
            if j < k:
                y = end + new_links[j]
        new_columns.append(Column(col.perp, tuple(spans)))

    plate = _plate(design, region.plate_id)
    cuts = list(plate.cuts)
    originals = sorted(region.cut_indices,
                       key=lambda i: _cut_order(region, plate.cuts[i]))
    rebuilt = [region.cut_segment(col.perp, a, b) for col in new_columns for a, b in col.cuts]
    for i, seg in zip(originals, rebuilt):
        cuts[i] = seg
    out = design.replace_plate(replace(plate, cuts=tuple(cuts)))
    return out, EmbedPlan(hinge_id, trits, delta_d, (d,))


def _cut_order(region: HingeRegion, seg):
    u, v = region.direction, region.across
    p, q = seg
    perp = 0.5 * ((p[0] + q[0]) * v[0] + (p[1] + q[1]) * v[1])
    start = min(p[0] * u[0] + p[1] * u[1], q[0] * u[0] + q[1] * u[1])
    col = min(range(len(region.columns)), key=lambda c: abs(region.columns[c].perp - perp))
    return (col, start)


def _plate(design: Design, plate_id: str):
    try:
        return design.plate(plate_id)
    except KeyError:
        raise UnknownStructure(f"no plate {plate_id!r}") from None


def embed_message(design: Design, structure_id: str, message: str, alpha: float | None = None,
                  min_feature: float = MIN_FEATURE) -> tuple[Design, EmbedPlan]:
    """Encode a text message into a plate perimeter or a hinge, by structure id."""
    from .codec import encode_message

    if any(h.id == structure_id for h in design.hinges):
        region = design.hinge(structure_id)
        ts = encode_message(message, region.n_elements, circular=False)
        return embed_hinge_plan(design, structure_id, ts,
                                ALPHA_HINGE if alpha is None else alpha, None, min_feature)
    plate = _plate(design, structure_id)
    model = joint_model(plate)
    if model is None:
        raise UnknownStructure(f"plate {structure_id!r} has no finger joints")
    n = sum(len(v[0]) for v in model.sides.values() if v is not None)
    ts = encode_message(message, n, circular=True)
    alpha = ALPHA_JOINTS if alpha is None else alpha
    ts = _unambiguous_placement(design, structure_id, message, ts, alpha, min_feature)
    return embed_joint_perimeter_plan(design, structure_id, ts, alpha, None, min_feature)


def _unambiguous_placement(design, plate_id, message, ts, alpha, min_feature) -> TritString:
    """Start the code at the first side whose ideal perimeter reads back only as ``message``.

    A side that shows fewer than three levels leaves its base width free, and
    a shifted reading of it may parse as another message. The anchor may sit
    at any side start, or at any side end read backwards; the first
    placement without such a rival wins.
    """
    from .decode import read_joint_sides
    from .errors import CodecError, DecodeError

    model = joint_model(_plate(design, plate_id))
    lengths = [len(model.sides[s][0]) for s in SIDES if model.sides[s] is not None]
    n = sum(lengths)
    base = ts.tiled(n)
    starts = [sum(lengths[:i]) for i in range(len(lengths))]
    forward = [base[n - s:] + base[:n - s] for s in starts]
    # read backwards from the last element of a side
    ends = [s + k - 1 for s, k in zip(starts, lengths)]
    backward = [tuple(base[(e - i) % n] for i in range(n)) for e in ends]
    for trits in forward + backward:
        candidate = TritString(trits)
        try:
            _, sides, _ = plan_joint_perimeter(design, plate_id, candidate, alpha, None, min_feature)
            _, parse, rivals = read_joint_sides(
                [sides[s][1] for s in SIDES if model.sides[s] is not None])
        except (EmbedError, CodecError, DecodeError):
            continue
        if parse.message == message and rivals == 0:
            return candidate
    return ts
