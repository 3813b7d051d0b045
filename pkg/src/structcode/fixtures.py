"""Builders for the reference designs used by the tests and the CLI demos."""

from __future__ import annotations

from .model import FINGER, GAP, SIDES, Design, Plate, build_outline


def _alternating(n: int, length: float, first: str = FINGER):
    other = GAP if first == FINGER else FINGER
    kinds = tuple(first if i % 2 == 0 else other for i in range(n))
    return kinds, (length / n,) * n


def finger_plate(width: float, height: float, *, elements: dict | int = 9,
                 thickness: float = 3.0, origin=(0.0, 0.0), plate_id: str = "plate-0",
                 first: dict | None = None, neighbors: dict | None = None) -> Plate:
    """Rectangular plate with evenly spaced finger joints.

    ``elements`` is a per-side element count (0 or missing = plain side) or
    one count for all four sides. Odd counts start and end with a finger.
    """
    if isinstance(elements, int):
        elements = {s: elements for s in SIDES}
    first = first or {}
    x0, y0 = origin
    rect = (x0, y0, x0 + width, y0 + height)
    sides = {}
    for s in SIDES:
        n = elements.get(s, 0)
        length = height if s in ("left", "right") else width
        sides[s] = _alternating(n, length, first.get(s, FINGER)) if n else None
    outline = build_outline(rect, thickness, sides)
    return Plate(plate_id, tuple(outline), neighbors=dict(neighbors or {}),
                 thickness=thickness)


def hinge_cuts(x0: float, y0: float, width: float = 50.0, height: float = 37.0,
               columns: int = 24, link: float = 3.0, end_cut: float = 4.5):
    """Staggered straight-line hinge with three cuts per column.

    Even columns have a link at one and two thirds of the height, odd columns
    near the ends, so neighbouring links never line up.
    """
    cuts = []
    pitch = width / (columns - 1)
    a = (height - 2 * link) / 3.0 + 0.5
    for i in range(columns):
        x = x0 + i * pitch
        if i % 2 == 0:
            spans = [(0.0, a), (a + link, height - a - link), (height - a, height)]
        else:
            spans = [(0.0, end_cut), (end_cut + link, height - end_cut - link),
                     (height - end_cut, height)]
        cuts.extend(((x, y0 + s), (x, y0 + e)) for s, e in spans)
    return cuts


def hinge_plate(width: float = 50.0, height: float = 37.0, *, margin: float = 10.0,
                columns: int = 24, plate_id: str = "plate-0", origin=(0.0, 0.0),
                patches: int = 1, patch_gap: float = 15.0) -> Plate:
    ox, oy = origin
    pw = patches * width + (patches - 1) * patch_gap + 2 * margin
    ph = height + 2 * margin
    outline = ((ox, oy), (ox, oy + ph), (ox + pw, oy + ph), (ox + pw, oy))
    cuts = []
    for k in range(patches):
        cuts += hinge_cuts(ox + margin + k * (width + patch_gap), oy + margin,
                           width, height, columns)
    return Plate(plate_id, outline, cuts=tuple(cuts))


def box_plate_4fingers() -> Design:
    """One 50 x 50 mm plate with nine elements (five fingers) per side."""
    return Design((finger_plate(50.0, 50.0, elements=9),))


def joints_plate_150x100() -> Design:
    """The 15 x 10 cm evaluation plate: 52 elements around the perimeter."""
    counts = {"left": 11, "bottom": 15, "right": 11, "top": 15}
    return Design((finger_plate(150.0, 100.0, elements=counts, thickness=4.0),))


def one_side_joints() -> Design:
    return Design((finger_plate(60.0, 40.0, elements={"bottom": 9}),))


def plain_rectangle() -> Design:
    return Design((Plate("plate-0", ((0.0, 0.0), (0.0, 40.0), (60.0, 40.0), (60.0, 0.0))),))


def hinge_5x3_7() -> Design:
    """Plain plate holding one 5 x 3.7 cm hinge of 72 cuts (24 columns x 3)."""
    return Design((hinge_plate(),))


def two_hinges() -> Design:
    return Design((hinge_plate(patches=2),))


def box_two_plates() -> Design:
    """Two plates whose facing edges interlock (A.right mates B.left)."""
    a = finger_plate(50.0, 50.0, elements={"right": 9, "bottom": 9}, plate_id="A",
                     neighbors={"right": ("B", "left")})
    b = finger_plate(50.0, 50.0, elements={"left": 9}, origin=(60.0, 0.0), plate_id="B",
                     first={"left": GAP}, neighbors={"left": ("A", "right")})
    return Design((a, b))


FIXTURES = {
    "box_plate_4fingers.svg": box_plate_4fingers,
    "joints_150x100.svg": joints_plate_150x100,
    "one_side_joints.svg": one_side_joints,
    "plain_rectangle.svg": plain_rectangle,
    "hinge_5x3_7.svg": hinge_5x3_7,
    "two_hinges.svg": two_hinges,
    "box_two_plates.svg": box_two_plates,
}
