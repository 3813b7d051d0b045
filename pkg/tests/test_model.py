import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structcode.errors import MalformedSvg, MissingUnits, TooFewElements, UnsupportedElement
from structcode.fixtures import finger_plate, hinge_plate
from structcode.model import (
    FINGER,
    GAP,
    Design,
    Plate,
    capacity,
    capacity_for,
    identify_finger_joints,
    identify_living_hinges,
    joint_perimeter,
)
from structcode.svg import load_design, parse_design, serialize_design

FIX = Path(__file__).parent / "fixtures"


def test_box_plate_has_four_nine_element_edges():
    design = load_design(FIX / "box_plate_4fingers.svg")
    assert len(design.plates) == 1
    edges = identify_finger_joints(design.plates[0])
    assert [e.side for e in edges] == ["left", "bottom", "right", "top"]
    for e in edges:
        assert e.n_elements == 9
        assert e.kinds.count(FINGER) == 5
        assert not e.below_minimum


def test_empty_svg():
    assert parse_design(b'<svg xmlns="http://www.w3.org/2000/svg"/>').plates == ()


def test_bezier_rejected():
    with pytest.raises(UnsupportedElement):
        load_design(FIX / "bezier.svg")


def test_not_xml():
    with pytest.raises(MalformedSvg):
        parse_design(b"<svg")


def test_missing_units():
    svg = b'<svg xmlns="http://www.w3.org/2000/svg"><path d="M 0,0 L 10,0 L 10,10 Z"/></svg>'
    with pytest.raises(MissingUnits):
        parse_design(svg)


def test_px_scale_attribute():
    svg = (b'<svg xmlns="http://www.w3.org/2000/svg" data-px-per-mm="2">'
           b'<path d="M 0,0 L 20,0 L 20,10 L 0,10 Z"/></svg>')
    plate = parse_design(svg).plates[0]
    assert plate.width == pytest.approx(10.0) and plate.height == pytest.approx(5.0)


def test_plain_rectangle_has_no_joints():
    design = load_design(FIX / "plain_rectangle.svg")
    assert identify_finger_joints(design.plates[0]) == []
    assert design.hinges == ()


def test_one_side_joints():
    edges = identify_finger_joints(load_design(FIX / "one_side_joints.svg").plates[0])
    assert len(edges) == 1 and edges[0].side == "bottom"


def test_short_edge_flagged():
    plate = finger_plate(40, 40, elements={"left": 5, "top": 9})
    edges = {e.side: e for e in identify_finger_joints(plate)}
    assert edges["left"].below_minimum and not edges["top"].below_minimum


def test_edge_lengths_sum_to_side():
    plate = load_design(FIX / "joints_150x100.svg").plates[0]
    for e in identify_finger_joints(plate):
        assert sum(e.widths) == pytest.approx(e.length, abs=1e-6)
        assert all(a != b for a, b in zip(e.kinds, e.kinds[1:]))


def test_hinge_fixture_has_72_cuts():
    design = load_design(FIX / "hinge_5x3_7.svg")
    (h,) = design.hinges
    assert h.n_cuts == 72
    assert len(h.columns) == 24
    assert h.n_elements == 48
    assert h.longest == pytest.approx(50.0)
    assert all(x > 0 for x in h.links)


def test_two_patches_two_regions():
    assert len(load_design(FIX / "two_hinges.svg").hinges) == 2
    assert len(load_design(FIX / "three_hinges.svg").hinges) == 3


def test_single_cut_is_no_hinge():
    plate = Plate("p", ((0, 0), (0, 40), (60, 40), (60, 0)), cuts=(((30, 5), (30, 35)),))
    assert identify_living_hinges(plate) == []


def test_pitch_threshold_groups_cuts():
    plate = hinge_plate()
    loose = Design((plate,), hinge_pitch_max=1.0)
    assert loose.hinges == ()
    assert len(Design((plate,)).hinges) == 1


def test_capacity_examples():
    per = joint_perimeter(load_design(FIX / "joints_150x100.svg").plates[0])
    cap = capacity(per)
    assert cap.delta_d_min == pytest.approx(1.875)
    assert cap.n_elements == 52 and cap.max_chars == 12
    hcap = capacity(load_design(FIX / "hinge_5x3_7.svg").hinges[0])
    assert hcap.delta_d_min == pytest.approx(50 / 45)


def test_capacity_too_few():
    with pytest.raises(TooFewElements):
        capacity_for(7, 100.0, 80.0)


def test_alpha_override():
    per = joint_perimeter(load_design(FIX / "joints_150x100.svg").plates[0])
    assert capacity(per, alpha=60).delta_d_min == pytest.approx(2.5)


def test_neighbors_read_back():
    a, b = load_design(FIX / "box_two_plates.svg").plates
    assert a.neighbors == {"right": ("B", "left")}
    assert b.neighbors == {"left": ("A", "right")}


def test_asymmetric_neighbors_rejected():
    svg = (FIX / "box_two_plates.svg").read_bytes().replace(b' data-neighbor-left="A:right"', b"")
    with pytest.raises(MalformedSvg):
        parse_design(svg)


def _same_geometry(d1: Design, d2: Design) -> bool:
    for p, q in zip(d1.plates, d2.plates, strict=True):
        if p.id != q.id or len(p.outline) != len(q.outline) or len(p.cuts) != len(q.cuts):
            return False
        pts = [(a, b) for a, b in zip(p.outline, q.outline)]
        pts += [(a, b) for s, t in zip(p.cuts, q.cuts) for a, b in zip(s, t)]
        if any(math.dist(a, b) > 1e-6 for a, b in pts):
            return False
    return True


@pytest.mark.parametrize("name", sorted(p.name for p in FIX.glob("*.svg") if p.name != "bezier.svg"))
def test_serialize_fixed_point(name):
    d1 = load_design(FIX / name)
    d2 = parse_design(serialize_design(d1))
    assert _same_geometry(d1, d2)
    assert _same_geometry(d2, parse_design(serialize_design(d2)))


@settings(max_examples=40, deadline=None)
@given(st.floats(30, 200), st.floats(30, 200), st.integers(8, 15), st.integers(8, 15),
       st.floats(0.2, 0.8))
def test_random_finger_plates_identify(w, h, nx, ny, frac):
    t = frac * min(w / nx, h / ny)
    plate = finger_plate(w, h, elements={"left": ny, "bottom": nx, "right": ny, "top": nx},
                         thickness=t)
    plate = parse_design(serialize_design(Design((plate,)))).plates[0]
    edges = identify_finger_joints(plate)
    assert [e.n_elements for e in edges] == [ny, nx, ny, nx]
    for e in edges:
        assert sum(e.widths) == pytest.approx(e.length, abs=1e-6)
        assert set(e.kinds) == {FINGER, GAP}
