import json

import numpy as np
import pytest

from gestkit import contour
from gestkit.contour import (
    ArticulatorId,
    ArticulatorMap,
    ProjectionMask,
    SynthConfig,
    apply_projection,
    build_projection,
    complement,
    generate_synthetic,
    read_csf,
    write_csf,
)
from gestkit.errors import ArgumentError, DimensionError, InvariantError, ParseError
from gestkit.ncmf import hoyer_sparsity

J, T, L, V, X = ArticulatorId  # noqa: E741 - canonical five, short names


def small_map():
    return ArticulatorMap((J, T, L, V, X))


class TestProjection:
    def test_full_union_is_all_true(self):
        mask = build_projection(small_map(), list(ArticulatorId))
        assert mask.diag.all()

    def test_single_articulator_mask(self):
        amap = ArticulatorMap((J, T, L, V))
        mask = build_projection(amap, {J})
        np.testing.assert_array_equal(mask.diag, [1, 1, 0, 0, 0, 0, 0, 0])

    def test_union_of_two_masks(self):
        amap = ArticulatorMap((J, T, L, V))
        mask = build_projection(amap, {J, L})
        np.testing.assert_array_equal(mask.diag, [1, 1, 0, 0, 1, 1, 0, 0])

    def test_empty_set_rejected(self):
        with pytest.raises(ArgumentError):
            build_projection(small_map(), set())

    def test_apply_identity(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((10, 7))
        mask = build_projection(small_map(), list(ArticulatorId))
        np.testing.assert_array_equal(apply_projection(mask, x), x)

    def test_apply_keeps_only_selected_rows(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((10, 4))
        mask = ProjectionMask(np.array([1, 1] + [0] * 8, dtype=bool))
        out = apply_projection(mask, x)
        np.testing.assert_array_equal(out[:2], x[:2])
        assert np.all(out[2:] == 0)

    def test_apply_is_idempotent(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((10, 6))
        mask = build_projection(small_map(), {T, V})
        once = apply_projection(mask, x)
        np.testing.assert_array_equal(apply_projection(mask, once), once)

    def test_masks_partition_coordinates(self):
        amap = generate_synthetic(SynthConfig(p=20, t=100, window=5, seed=3)).contours.amap
        total = np.zeros(2 * amap.p, dtype=int)
        for art in ArticulatorId:
            total += build_projection(amap, {art}).diag.astype(int)
        assert np.all(total == 1)

    def test_mask_and_complement_reassemble(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((10, 5))
        mask = build_projection(small_map(), {J, X})
        recombined = apply_projection(mask, x) + apply_projection(complement(mask), x)
        np.testing.assert_array_equal(recombined, x)

    def test_mask_must_pair_coordinates(self):
        with pytest.raises(InvariantError):
            ProjectionMask(np.array([True, False, False, False]))

    def test_apply_length_mismatch(self):
        mask = build_projection(small_map(), {J})
        with pytest.raises(DimensionError):
            apply_projection(mask, np.zeros((4, 3)))


class TestSyntheticGenerator:
    def test_deterministic_for_fixed_config(self):
        cfg = SynthConfig(p=20, t=120, gestures=6, window=7, seed=42)
        a = generate_synthetic(cfg)
        b = generate_synthetic(cfg)
        np.testing.assert_array_equal(a.contours.x, b.contours.x)
        np.testing.assert_array_equal(a.true_factors, b.true_factors)
        np.testing.assert_array_equal(a.true_scores, b.true_scores)
        np.testing.assert_array_equal(a.true_activations, b.true_activations)
        np.testing.assert_array_equal(a.true_kernels, b.true_kernels)

    def test_noiseless_data_is_exact_factor_model(self):
        cfg = SynthConfig(p=12, t=90, gestures=5, window=5, seed=7, noise_sigma=0.0)
        truth = generate_synthetic(cfg)
        np.testing.assert_array_equal(
            truth.contours.x, truth.true_factors @ truth.true_scores.T
        )

    def test_default_config_row_sparsity(self):
        truth = generate_synthetic(SynthConfig(seed=5))
        for d in range(truth.true_activations.shape[0]):
            assert hoyer_sparsity(truth.true_activations[d]) >= 0.85

    def test_scores_match_convolutive_mixture(self):
        truth = generate_synthetic(SynthConfig(p=15, t=150, gestures=6, window=9, seed=9))
        rebuilt = contour.convolve_scores(truth.true_activations, truth.true_kernels)
        np.testing.assert_allclose(truth.true_scores, rebuilt, atol=1e-12)

    def test_truth_invariants_over_seeds(self):
        for seed in range(20):
            cfg = SynthConfig(p=25, t=200, gestures=7, window=9, seed=seed)
            contour.validate_truth(generate_synthetic(cfg))

    def test_too_short_sequence_rejected(self):
        with pytest.raises(ArgumentError):
            generate_synthetic(SynthConfig(p=10, t=30, window=21, seed=0))

    def test_partition_must_cover_p(self):
        bad = {a: 1 for a in ArticulatorId}
        with pytest.raises(ArgumentError):
            generate_synthetic(SynthConfig(p=10, t=200, window=9, partition=bad))


class TestCsfFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        truth = generate_synthetic(SynthConfig(p=8, t=40, gestures=5, window=5, seed=13))
        path = tmp_path / "seq.csf"
        write_csf(truth.contours, path)
        back = read_csf(path)
        np.testing.assert_array_equal(back.x, truth.contours.x)
        assert back.amap == truth.contours.amap
        assert back.fps == truth.contours.fps

    def test_write_is_deterministic(self, tmp_path):
        truth = generate_synthetic(SynthConfig(p=8, t=40, gestures=5, window=5, seed=14))
        p1, p2 = tmp_path / "a.csf", tmp_path / "b.csf"
        write_csf(truth.contours, p1)
        write_csf(truth.contours, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_zero_frames_rejected(self, tmp_path):
        path = tmp_path / "bad.csf"
        path.write_text(
            json.dumps(
                {"p": 5, "t": 0, "fps": 83.0, "articulators": ["jaw"] * 5, "frames": []}
            )
        )
        with pytest.raises(ParseError):
            read_csf(path)

    def test_duplicate_labels_accepted(self, tmp_path):
        doc = {
            "p": 5,
            "t": 1,
            "fps": 83.0,
            "articulators": ["jaw", "tongue", "tongue", "velum", "larynx"],
            "frames": [[0.0] * 10],
        }
        path = tmp_path / "dup.csf"
        path.write_text(json.dumps(doc))
        seq = read_csf(path)
        assert seq.amap.vertex_count(ArticulatorId.TONGUE) == 2

    def test_unknown_label_rejected_with_position(self, tmp_path):
        doc = {
            "p": 5,
            "t": 1,
            "fps": 83.0,
            "articulators": ["jaw", "tonge", "lip", "velum", "larynx"],
            "frames": [[0.0] * 10],
        }
        path = tmp_path / "bad.csf"
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError, match=r"articulators\[1\]"):
            read_csf(path)

    def test_frame_width_mismatch_rejected(self, tmp_path):
        doc = {
            "p": 5,
            "t": 2,
            "fps": 83.0,
            "articulators": ["jaw", "tongue", "lip", "velum", "larynx"],
            "frames": [[0.0] * 10, [0.0] * 9],
        }
        path = tmp_path / "bad.csf"
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError, match=r"frames\[1\]"):
            read_csf(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.csf"
        path.write_text('{"p": 5,\n "t": }')
        with pytest.raises(ParseError, match="line 2"):
            read_csf(path)
