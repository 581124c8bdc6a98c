import pytest
from hypothesis import given, strategies as st

from dualsafe.geometry import BoundingBox, area, intersection_area, iou

from oracles import shapely_iou

coord = st.floats(-1000, 1000, allow_nan=False, allow_infinity=False)
size = st.floats(0.01, 500, allow_nan=False, allow_infinity=False)


@st.composite
def boxes(draw):
    x, y, w, h = draw(coord), draw(coord), draw(size), draw(size)
    return BoundingBox(x, y, x + w, y + h)


@pytest.mark.parametrize(
    "coords, expected",
    [((0, 0, 2, 2), 4.0), ((0, 0, 1, 3), 3.0), ((0.5, 0.5, 1.5, 2.5), 2.0)],
)
def test_area(coords, expected):
    assert area(BoundingBox(*coords)) == expected


@pytest.mark.parametrize(
    "coords",
    [(0, 0, 0, 1), (0, 0, 1, 0), (1, 0, 0, 1), (0, 0, float("nan"), 1), (0, 0, float("inf"), 1)],
)
def test_degenerate_boxes_rejected(coords):
    with pytest.raises(ValueError):
        BoundingBox(*coords)


def test_iou_hand_cases():
    assert iou(BoundingBox(0, 0, 1, 1), BoundingBox(2, 2, 3, 3)) == 0.0
    assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 0, 3, 2)) == 1 / 3


def test_edge_and_corner_contact_is_zero():
    a = BoundingBox(0, 0, 1, 1)
    assert iou(a, BoundingBox(1, 0, 2, 1)) == 0.0
    assert iou(a, BoundingBox(1, 1, 2, 2)) == 0.0
    assert intersection_area(a, BoundingBox(0, 1, 1, 2)) == 0.0


def test_list_round_trip():
    b = BoundingBox(1.5, 2, 3, 4.25)
    assert BoundingBox.from_list(b.to_list()) == b
    with pytest.raises(ValueError):
        BoundingBox.from_list([1, 2, 3])


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0
    assert (v == 0.0) == (intersection_area(a, b) == 0.0)


@given(boxes())
def test_iou_identity(b):
    assert iou(b, b) == 1.0


@given(boxes(), boxes())
def test_iou_matches_polygon_oracle(a, b):
    assert iou(a, b) == pytest.approx(shapely_iou(a, b), abs=1e-9)


@given(boxes(), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_containment(outer, f1, f2, f3, f4):
    w, h = outer.x_max - outer.x_min, outer.y_max - outer.y_min
    x0 = outer.x_min + f1 * w * 0.5
    y0 = outer.y_min + f2 * h * 0.5
    x1 = x0 + max(f3, 0.01) * (outer.x_max - x0)
    y1 = y0 + max(f4, 0.01) * (outer.y_max - y0)
    inner = BoundingBox(x0, y0, min(x1, outer.x_max), min(y1, outer.y_max))
    assert iou(inner, outer) == pytest.approx(area(inner) / area(outer), rel=1e-9)


@given(boxes(), boxes(), st.floats(-100, 100), st.floats(-100, 100))
def test_translation_invariance(a, b, dx, dy):
    assert iou(a.translated(dx, dy), b.translated(dx, dy)) == pytest.approx(iou(a, b), abs=1e-9)
