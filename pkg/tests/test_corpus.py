"""Manifest validation, AAPLFT1 round-trips, and temporal resampling."""

import json
import struct

import numpy as np
import pytest

from aapl.corpus import (
    FEATURE_MAGIC,
    AAPLLabelSet,
    DatasetManifest,
    FeatureFileError,
    FeatureSequence,
    ManifestError,
    VideoRecord,
    load_features,
    load_labels,
    load_manifest,
    rescale_features,
    sample_to_train_length,
    save_labels,
    save_manifest,
    write_features,
)


def make_manifest(tmp_path, videos=None, class_names=("a", "b", "c")):
    if videos is None:
        videos = [
            {"id": "v1", "duration": 10.0, "frame_rate": 16.0, "feature_path": "v1.aaplft"},
            {"id": "v2", "duration": 5.0, "frame_rate": 16.0, "feature_path": "v2.aaplft"},
        ]
    payload = {"class_names": list(class_names), "videos": videos, "split": "training"}
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(payload))
    return path


class TestManifest:
    def test_round_trip_of_stated_fields(self, tmp_path):
        path = make_manifest(tmp_path)
        manifest = load_manifest(path)
        assert manifest.num_classes == 3
        assert len(manifest.videos) == 2
        assert manifest.video("v1").duration == 10.0

    def test_end_before_start_names_the_segment(self, tmp_path):
        videos = [
            {
                "id": "bad",
                "duration": 10.0,
                "frame_rate": 16.0,
                "feature_path": "x.aaplft",
                "ground_truth": [{"start": 4.0, "end": 2.0, "class_index": 0}],
            }
        ]
        path = make_manifest(tmp_path, videos=videos)
        with pytest.raises(ManifestError, match=r"bad.*\(4\.0, 2\.0\)"):
            load_manifest(path)

    def test_missing_feature_file_with_check_flag(self, tmp_path):
        path = make_manifest(tmp_path)
        with pytest.raises(ManifestError, match="v1.aaplft"):
            load_manifest(path, check_features=True)
        load_manifest(path)  # no flag, no check

    def test_duplicate_video_ids_rejected(self, tmp_path):
        videos = [
            {"id": "v", "duration": 1.0, "frame_rate": 16.0, "feature_path": "a"},
            {"id": "v", "duration": 2.0, "frame_rate": 16.0, "feature_path": "b"},
        ]
        with pytest.raises(ManifestError, match="duplicate"):
            load_manifest(make_manifest(tmp_path, videos=videos))

    def test_save_load_round_trip(self, tmp_path):
        manifest = load_manifest(make_manifest(tmp_path))
        out = tmp_path / "copy.json"
        save_manifest(manifest, out)
        assert load_manifest(out) == manifest

    def test_bad_thresholds_rejected(self, tmp_path):
        payload = {
            "class_names": ["a"],
            "videos": [],
            "map_thresholds": [0.5, 0.3],
        }
        path = tmp_path / "m.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ManifestError, match="map_thresholds"):
            load_manifest(path)


class TestFeatureIO:
    def test_header_and_payload(self, tmp_path):
        path = tmp_path / "f.aaplft"
        data = np.arange(12, dtype=np.float32).reshape(3, 4)
        write_features(FeatureSequence("v", data), path)
        seq = load_features(path)
        assert seq.length == 3 and seq.dims == 4
        np.testing.assert_array_equal(seq.data, data)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "f.aaplft"
        blob = FEATURE_MAGIC + struct.pack("<II", 3, 4) + b"\0" * (11 * 4)
        path.write_bytes(blob)
        with pytest.raises(FeatureFileError, match="truncated"):
            load_features(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "f.aaplft"
        path.write_bytes(b"NOTMAGIC" + struct.pack("<II", 1, 2) + b"\0" * 8)
        with pytest.raises(FeatureFileError, match="magic"):
            load_features(path)

    def test_write_read_identity_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((7, 6)).astype(np.float32)
        path = tmp_path / "f.aaplft"
        write_features(FeatureSequence("v", data), path)
        seq = load_features(path)
        assert seq.data.tobytes() == data.tobytes()

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "f.aaplft"
        data = np.array([[np.inf, 0.0]], dtype="<f4")
        blob = FEATURE_MAGIC + struct.pack("<II", 1, 2) + data.tobytes()
        path.write_bytes(blob)
        with pytest.raises(FeatureFileError, match="non-finite"):
            load_features(path)

    def test_odd_dims_rejected(self):
        with pytest.raises(FeatureFileError, match="even"):
            FeatureSequence("v", np.zeros((2, 3), dtype=np.float32))


class TestLabelIO:
    def test_round_trip(self, tmp_path):
        labels = AAPLLabelSet("v1", ((1.0, frozenset({0, 2})), (2.5, frozenset())))
        path = tmp_path / "labels.json"
        save_labels([labels], path)
        loaded = load_labels(path)
        assert loaded["v1"] == labels.sorted()
        raw = json.loads(path.read_text())
        assert raw[0]["labels"][1]["classes"] == []  # background serialized as empty list

    def test_directory_loading(self, tmp_path):
        d = tmp_path / "labels"
        d.mkdir()
        save_labels(AAPLLabelSet("a", ((0.5, frozenset({1})),)), d / "a.json")
        save_labels(AAPLLabelSet("b", ()), d / "b.json")
        loaded = load_labels(d)
        assert set(loaded) == {"a", "b"}

    def test_duplicate_timestamps_rejected(self):
        labels = AAPLLabelSet("v", ((1.0, frozenset()), (1.0, frozenset({0}))))
        with pytest.raises(ManifestError, match="duplicate"):
            labels.validate()


class TestRescale:
    def test_endpoint_aligned_interpolation(self):
        seq = FeatureSequence("v", np.array([[0.0, 0.0], [2.0, 2.0]], dtype=np.float32))
        out = rescale_features(seq, 3)
        np.testing.assert_allclose(out.data[:, 0], [0.0, 1.0, 2.0])

    def test_identity_at_own_length(self):
        rng = np.random.default_rng(1)
        seq = FeatureSequence("v", rng.standard_normal((5, 4)).astype(np.float32))
        out = rescale_features(seq, 5)
        np.testing.assert_array_equal(out.data, seq.data)

    def test_endpoints_preserved_downsampling(self):
        seq = FeatureSequence(
            "v", np.array([[0.0, 0.0], [3.0, 3.0], [6.0, 6.0]], dtype=np.float32)
        )
        out = rescale_features(seq, 2)
        np.testing.assert_allclose(out.data[:, 0], [0.0, 6.0])

    def test_upsample_then_downsample_preserves_endpoints(self):
        rng = np.random.default_rng(2)
        seq = FeatureSequence("v", rng.standard_normal((4, 4)).astype(np.float32))
        up = rescale_features(seq, 10)
        down = rescale_features(up, 4)
        np.testing.assert_allclose(down.data[0], seq.data[0], rtol=1e-6)
        np.testing.assert_allclose(down.data[-1], seq.data[-1], rtol=1e-6)

    def test_target_below_two_rejected(self):
        seq = FeatureSequence("v", np.zeros((3, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            rescale_features(seq, 1)


class TestTrainLengthSampling:
    """snippet_len=16 @ 16 fps puts snippet i at [i, i+1) seconds."""

    def _seq(self, T, D=2):
        data = np.arange(T, dtype=np.float32)[:, None].repeat(D, axis=1)
        return FeatureSequence("v", data, snippet_len=16, frame_rate=16.0)

    def test_identity_when_lengths_match(self):
        seq = self._seq(10)
        labels = AAPLLabelSet("v", ((4.5, frozenset({1})),))
        out, mapped = sample_to_train_length(seq, labels, 10, mode="deterministic")
        np.testing.assert_array_equal(out.data, seq.data)
        assert mapped.labels == ((4, frozenset({1})),)

    def test_stratum_midpoints_and_tie_to_earlier(self):
        seq = self._seq(10)
        # t=4.5 s lives in source snippet 4; retained sources are [1,3,5,7,9],
        # and 4 ties between sources 3 and 5 -> earlier -> position 1.
        labels = AAPLLabelSet("v", ((4.5, frozenset({2})),))
        out, mapped = sample_to_train_length(seq, labels, 5, mode="deterministic")
        np.testing.assert_array_equal(out.data[:, 0], [1.0, 3.0, 5.0, 7.0, 9.0])
        assert mapped.labels == ((1, frozenset({2})),)

    def test_colliding_labels_merge_by_union(self):
        seq = self._seq(10)
        labels = AAPLLabelSet(
            "v", ((2.2, frozenset({1, 2})), (3.8, frozenset({3})))
        )
        _, mapped = sample_to_train_length(seq, labels, 2, mode="deterministic")
        # Both source snippets 2 and 3 snap to retained source 2 (position 0).
        assert mapped.labels == ((0, frozenset({1, 2, 3})),)

    def test_foreground_wins_over_background_in_merge(self):
        seq = self._seq(10)
        labels = AAPLLabelSet("v", ((2.2, frozenset()), (3.8, frozenset({3}))))
        _, mapped = sample_to_train_length(seq, labels, 2, mode="deterministic")
        assert mapped.labels == ((0, frozenset({3})),)

    def test_all_background_merge_stays_background(self):
        seq = self._seq(10)
        labels = AAPLLabelSet("v", ((2.2, frozenset()), (3.8, frozenset())))
        _, mapped = sample_to_train_length(seq, labels, 2, mode="deterministic")
        assert mapped.labels == ((0, frozenset()),)

    def test_deterministic_mode_is_pure(self):
        seq = self._seq(17)
        labels = AAPLLabelSet("v", ((3.0, frozenset({0})), (11.0, frozenset())))
        a = sample_to_train_length(seq, labels, 6, mode="deterministic", seed=1)
        b = sample_to_train_length(seq, labels, 6, mode="deterministic", seed=99)
        np.testing.assert_array_equal(a[0].data, b[0].data)
        assert a[1] == b[1]

    def test_stochastic_mode_reproducible_under_seed(self):
        seq = self._seq(23)
        labels = AAPLLabelSet("v", ((8.5, frozenset({1})),))
        a = sample_to_train_length(seq, labels, 7, mode="stochastic", seed=5)
        b = sample_to_train_length(seq, labels, 7, mode="stochastic", seed=5)
        np.testing.assert_array_equal(a[0].data, b[0].data)
        assert a[1] == b[1]

    def test_upsampling_maps_labels_in_range(self):
        seq = self._seq(4)
        labels = AAPLLabelSet("v", ((0.5, frozenset({0})), (3.5, frozenset())))
        out, mapped = sample_to_train_length(seq, labels, 9, mode="deterministic")
        assert out.length == 9
        assert mapped.labels == ((0, frozenset({0})), (8, frozenset()))

    def test_mapped_indices_within_target_range(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            T = int(rng.integers(1, 40))
            target = int(rng.integers(1, 40))
            seq = FeatureSequence(
                "v",
                rng.standard_normal((T, 2)).astype(np.float32),
                snippet_len=16,
                frame_rate=16.0,
            )
            times = rng.uniform(0, T, size=3)
            labels = AAPLLabelSet(
                "v", tuple((float(t), frozenset({0})) for t in sorted(set(times)))
            )
            _, mapped = sample_to_train_length(seq, labels, target, mode="stochastic", seed=3)
            assert all(0 <= i < target for i, _ in mapped.labels)
