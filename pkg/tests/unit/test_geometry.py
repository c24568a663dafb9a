"""Unit tests for exact scalars, transforms, overlap tests and configuration hashing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compose_mcts.envs.action_table import footprint
from compose_mcts.envs.tangram_pieces import PIECES, SHAPES
from compose_mcts.geometry import (
    IDENTITY,
    ConvexPolygon,
    RigidTransform,
    Scalar,
    Vec2,
    anchor_points,
    apply_transform,
    canonical_config_hash,
    polygon_in_rect,
    polygons_overlap,
    polygons_touch,
    scalar_sign,
    transform_polygon,
)
from compose_mcts.lib.exceptions import GeometryError, ScalarOverflowError

pytestmark = pytest.mark.unit

small_ints = st.integers(min_value=-1000, max_value=1000)
scalars = st.builds(Scalar, small_ints, small_ints, st.integers(min_value=0, max_value=6))
vectors = st.builds(Vec2, scalars, scalars)
transforms = st.builds(RigidTransform, st.integers(min_value=0, max_value=7), st.booleans(), vectors)


def unit_square(x: Scalar | int = 0, y: Scalar | int = 0) -> ConvexPolygon:
    square = ConvexPolygon.from_ints([(0, 0), (1, 0), (1, 1), (0, 1)])
    return transform_polygon(RigidTransform(t=Vec2.of(x, y)), square)


class TestScalar:
    """Exact sign and normal form."""

    def test_sign_examples(self):
        assert scalar_sign(Scalar(1, 0, 0)) == 1
        assert scalar_sign(Scalar(0, 0, 2)) == 0
        assert scalar_sign(Scalar(-3, 2, 0)) == -1

    def test_mixed_sign_where_sqrt2_term_wins(self):
        # 1 - sqrt(2) < 0
        assert scalar_sign(Scalar(1, -1, 0)) == -1
        assert scalar_sign(Scalar(-1, 1, 0)) == 1

    def test_normal_form_is_unique(self):
        assert Scalar(4, 2, 2) == Scalar(2, 1, 1)
        assert Scalar(0, 0, 5) == Scalar(0)

    def test_overflow_is_reported(self):
        with pytest.raises(ScalarOverflowError):
            Scalar(2**63, 0, 0)
        big = Scalar(2**62, 0, 0)
        with pytest.raises(ScalarOverflowError):
            big + big

    @given(scalars, scalars)
    def test_sign_agrees_with_float_comparison(self, a, b):
        difference = float(a) - float(b)
        if abs(difference) > 1e-6:
            assert (a - b).sign() == (1 if difference > 0 else -1)


class TestRigidTransform:
    """Rotations by multiples of 45 degrees, mirroring and translation."""

    def test_quarter_turn(self):
        T = RigidTransform(rot=2)
        assert apply_transform(T, Vec2.of(1, 0)) == Vec2.of(0, 1)

    def test_eighth_turn_is_exact(self):
        T = RigidTransform(rot=1)
        result = apply_transform(T, Vec2.of(2, 0))
        assert result.x == Scalar(0, 1, 0)
        assert result.y == Scalar(0, 1, 0)

    def test_reflect_then_translate(self):
        T = RigidTransform(rot=0, flip=True, t=Vec2.of(1, 0))
        assert apply_transform(T, Vec2.of(1, 1)) == Vec2.of(0, 1)

    def test_rotation_index_is_checked(self):
        with pytest.raises(GeometryError):
            RigidTransform(rot=8)

    @given(transforms, transforms, vectors)
    @settings(max_examples=200)
    def test_composition_matches_sequential_application(self, outer, inner, v):
        assert apply_transform(outer.compose(inner), v) == apply_transform(outer, apply_transform(inner, v))

    @given(transforms, vectors)
    def test_inverse_round_trip(self, T, v):
        assert apply_transform(T.inverse(), apply_transform(T, v)) == v


class TestConvexPolygon:
    def test_rejects_clockwise_order(self):
        with pytest.raises(GeometryError):
            ConvexPolygon.from_ints([(0, 0), (0, 1), (1, 1), (1, 0)])

    def test_rejects_collinear_vertices(self):
        with pytest.raises(GeometryError):
            ConvexPolygon.from_ints([(0, 0), (1, 0), (2, 0), (1, 1)])

    def test_rejects_repeated_vertices(self):
        with pytest.raises(GeometryError):
            ConvexPolygon.from_ints([(0, 0), (1, 0), (1, 0), (0, 1)])

    def test_reflection_keeps_counter_clockwise_order(self):
        for piece in PIECES:
            transform_polygon(RigidTransform(rot=3, flip=True), piece.canonical)


class TestOverlap:
    """Positive-area interior intersection; touching is allowed."""

    def test_disjoint_squares(self):
        assert not polygons_overlap(unit_square(), unit_square(2, 2))

    def test_shared_edge_is_not_overlap(self):
        assert not polygons_overlap(unit_square(), unit_square(1, 0))
        assert polygons_touch(unit_square(), unit_square(1, 0))

    def test_shared_vertex_is_not_overlap(self):
        assert not polygons_overlap(unit_square(), unit_square(1, 1))
        assert polygons_touch(unit_square(), unit_square(1, 1))

    def test_half_offset_squares_overlap(self):
        half = Scalar(1, 0, 1)
        assert polygons_overlap(unit_square(), unit_square(half, half))
        assert not polygons_touch(unit_square(), unit_square(half, half))

    def test_overlap_is_symmetric_over_piece_poses(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a, b = rng.integers(len(PIECES), size=2)
            pa = transform_polygon(RigidTransform(int(rng.integers(8))), SHAPES[int(a)])
            pb = transform_polygon(
                RigidTransform(int(rng.integers(8)), bool(rng.integers(2)), Vec2.of(*map(int, rng.integers(-3, 4, 2)))),
                SHAPES[int(b)],
            )
            assert polygons_overlap(pa, pb) == polygons_overlap(pb, pa)


class TestPolygonInRect:
    bounds = (Scalar(-2), Scalar(2), Scalar(-2), Scalar(2))

    def test_inside(self):
        assert polygon_in_rect(unit_square(), *self.bounds)

    def test_vertex_on_boundary_counts_as_inside(self):
        assert polygon_in_rect(unit_square(1, 1), *self.bounds)

    def test_outside(self):
        assert not polygon_in_rect(unit_square(3, 0), *self.bounds)

    def test_empty_rectangle_is_an_error(self):
        with pytest.raises(GeometryError):
            polygon_in_rect(unit_square(), Scalar(1), Scalar(1), Scalar(0), Scalar(2))


class TestAnchors:
    def test_triangle_has_six_anchors_with_edge_midpoint(self):
        triangle = ConvexPolygon.from_ints([(0, 0), (2, 0), (0, 2)])
        anchors = anchor_points(triangle)
        assert len(anchors) == 6
        assert anchors[3] == Vec2.of(1, 0)

    def test_square_has_eight_anchors(self):
        assert len(anchor_points(ConvexPolygon.from_ints([(0, 0), (2, 0), (2, 2), (0, 2)]))) == 8

    def test_anchor_count_is_twice_vertex_count(self):
        for piece in PIECES:
            assert len(anchor_points(piece.canonical)) == 2 * len(piece.canonical)

    def test_order_is_stable(self):
        first = [v.key() for v in anchor_points(SHAPES[6])]
        second = [v.key() for v in anchor_points(SHAPES[6])]
        assert first == second


class TestCanonicalHash:
    config = [(0, IDENTITY), (5, RigidTransform(rot=2, t=Vec2.of(2, 0)))]

    def test_translation_invariance(self):
        shift = Vec2.of(5, 5)
        moved = [(pid, pose.translated(shift)) for pid, pose in self.config]
        assert canonical_config_hash(moved, SHAPES) == canonical_config_hash(self.config, SHAPES)

    def test_rotating_one_piece_changes_hash(self):
        rotated = [self.config[0], (5, RigidTransform(rot=3, t=Vec2.of(2, 0)))]
        assert canonical_config_hash(rotated, SHAPES) != canonical_config_hash(self.config, SHAPES)

    def test_square_turned_onto_itself_hashes_apart(self):
        # Both poses cover [2, 4] x [0, 2]; the hash keys on the pose, not the region.
        plain = [(0, IDENTITY), (5, RigidTransform(t=Vec2.of(2, 0)))]
        turned = [(0, IDENTITY), (5, RigidTransform(rot=2, t=Vec2.of(4, 0)))]
        regions = {footprint(transform_polygon(pose, SHAPES[5])) for _, pose in (plain[1], turned[1])}
        assert len(regions) == 1
        assert canonical_config_hash(plain, SHAPES) != canonical_config_hash(turned, SHAPES)

    def test_single_piece_matches_piece_at_origin(self):
        far = [(3, RigidTransform(rot=1, t=Vec2.of(-4, 7)))]
        at_origin = [(3, RigidTransform(rot=1))]
        assert canonical_config_hash(far, SHAPES) == canonical_config_hash(at_origin, SHAPES)

    def test_empty_configuration_is_an_error(self):
        with pytest.raises(GeometryError):
            canonical_config_hash([], SHAPES)
