import numpy as np
import pytest

from carvemix import (
    AnnotatedSample,
    GridShape,
    LabelMask,
    ShapeMismatch,
    SoftLabelMask,
    Spacing,
    SpacingMismatch,
    Volume3D,
    elementwise_mix,
    elementwise_mix_labels,
)

from conftest import random_mixed_mask


def vol(values, spacing=(1.0, 1.0, 1.0)):
    return Volume3D.from_array(np.asarray(values, np.float32), spacing)


def lbl(values, spacing=(1.0, 1.0, 1.0)):
    return LabelMask.from_array(np.asarray(values, np.uint8), spacing)


class TestTypes:
    @pytest.mark.parametrize("bad", [(0, 1, 1), (1, -2, 1), (1, 1, 0)])
    def test_grid_shape_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            GridShape(*bad)

    def test_grid_shape_voxels(self):
        assert GridShape(2, 3, 4).voxels == 24

    @pytest.mark.parametrize("bad", [(0.0, 1, 1), (1, -1.0, 1), (1, 1, float("nan"))])
    def test_spacing_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            Spacing(*bad)

    def test_volume_shape_must_match_data(self):
        with pytest.raises(ValueError):
            Volume3D(GridShape(2, 2, 2), Spacing(1, 1, 1), np.zeros((2, 2, 3), np.float32))

    def test_volume_data_coerced_float32_contiguous(self):
        v = Volume3D.from_array(np.arange(8, dtype=np.int32).reshape(2, 2, 2))
        assert v.data.dtype == np.float32 and v.data.flags.c_contiguous

    def test_label_rejects_non_binary(self):
        with pytest.raises(ValueError, match="0 or 1"):
            LabelMask.from_array(np.full((2, 2, 2), 2, np.uint8))

    def test_soft_label_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SoftLabelMask(GridShape(1, 1, 1), Spacing(1, 1, 1), np.array([[[1.5]]], np.float32))

    def test_sample_requires_matching_grids(self):
        image = vol(np.zeros((2, 2, 2)))
        with pytest.raises(ShapeMismatch):
            AnnotatedSample(image=image, label=lbl(np.zeros((2, 2, 3))), id="x")
        with pytest.raises(SpacingMismatch):
            AnnotatedSample(image=image, label=lbl(np.zeros((2, 2, 2)), (1, 1, 2)), id="x")


class TestElementwiseMix:
    def test_two_voxel_substitution(self):
        out = elementwise_mix(
            vol([[[10.0]], [[20.0]]]), vol([[[1.0]], [[2.0]]]), lbl([[[1]], [[0]]])
        )
        assert out.data.reshape(-1).tolist() == [10.0, 2.0]

    def test_mask_all_ones_returns_a(self, rng):
        a = vol(rng.normal(size=(4, 4, 4)))
        b = vol(rng.normal(size=(4, 4, 4)))
        out = elementwise_mix(a, b, lbl(np.ones((4, 4, 4))))
        assert out.data.tobytes() == a.data.tobytes()

    def test_mask_all_zeros_returns_b(self, rng):
        a = vol(rng.normal(size=(4, 4, 4)))
        b = vol(rng.normal(size=(4, 4, 4)))
        out = elementwise_mix(a, b, lbl(np.zeros((4, 4, 4))))
        assert out.data.tobytes() == b.data.tobytes()

    def test_every_voxel_from_one_input(self, rng):
        a = vol(rng.normal(size=(5, 5, 5)))
        b = vol(rng.normal(size=(5, 5, 5)))
        m = lbl(random_mixed_mask(rng, (5, 5, 5)))
        out = elementwise_mix(a, b, m)
        assert np.logical_or(out.data == a.data, out.data == b.data).all()

    def test_complement_symmetry(self, rng):
        a = vol(rng.normal(size=(5, 5, 5)))
        b = vol(rng.normal(size=(5, 5, 5)))
        m = random_mixed_mask(rng, (5, 5, 5))
        fwd = elementwise_mix(a, b, lbl(m))
        rev = elementwise_mix(b, a, lbl(1 - m))
        assert fwd.data.tobytes() == rev.data.tobytes()

    def test_spacing_and_meta_inherited_from_b(self, rng):
        a = vol(rng.normal(size=(2, 2, 2)), spacing=(1, 1, 1))
        b = Volume3D.from_array(
            rng.normal(size=(2, 2, 2)).astype(np.float32), (1, 1, 1), meta=b"x" * 348
        )
        out = elementwise_mix(a, b, lbl(np.ones((2, 2, 2))))
        assert out.meta == b.meta and out.spacing == b.spacing

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeMismatch):
            elementwise_mix(
                vol(np.zeros((2, 2, 2))), vol(np.zeros((2, 2, 3))), lbl(np.zeros((2, 2, 2)))
            )

    def test_spacing_tolerance(self):
        a = vol(np.zeros((2, 2, 2)), spacing=(1.0, 1.0, 1.0))
        near = vol(np.zeros((2, 2, 2)), spacing=(1.0 + 5e-6, 1.0, 1.0))
        far = vol(np.zeros((2, 2, 2)), spacing=(1.0 + 5e-5, 1.0, 1.0))
        m = lbl(np.zeros((2, 2, 2)))
        elementwise_mix(a, near, m)
        with pytest.raises(SpacingMismatch):
            elementwise_mix(a, far, m)


class TestElementwiseMixLabels:
    def test_two_voxel_case(self):
        out = elementwise_mix_labels(
            lbl([[[1]], [[0]]]), lbl([[[0]], [[1]]]), lbl([[[1]], [[0]]])
        )
        assert out.data.reshape(-1).tolist() == [1, 1]

    def test_idempotent_when_equal(self, rng):
        a = random_mixed_mask(rng, (4, 4, 4))
        for _ in range(5):
            m = lbl(random_mixed_mask(rng, (4, 4, 4)))
            out = elementwise_mix_labels(lbl(a), lbl(a), m)
            assert np.array_equal(out.data, a)

    def test_mask_equals_a_gives_union_oracle(self, rng):
        # Oracle: explicit voxel enumeration of a OR (b AND NOT a).
        for _ in range(20):
            a = random_mixed_mask(rng, (4, 4, 4))
            b = random_mixed_mask(rng, (4, 4, 4))
            out = elementwise_mix_labels(lbl(a), lbl(b), lbl(a))
            for x in range(4):
                for y in range(4):
                    for z in range(4):
                        expect = a[x, y, z] or (b[x, y, z] and not a[x, y, z])
                        assert out.data[x, y, z] == expect

    def test_output_always_binary(self, rng):
        for _ in range(10):
            a = lbl(random_mixed_mask(rng, (4, 4, 4)))
            b = lbl(random_mixed_mask(rng, (4, 4, 4)))
            m = lbl(random_mixed_mask(rng, (4, 4, 4)))
            out = elementwise_mix_labels(a, b, m)
            assert set(np.unique(out.data)) <= {0, 1}
