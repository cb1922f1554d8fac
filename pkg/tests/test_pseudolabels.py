"""Run finding, qualification conditions, and label merging."""

import numpy as np
import pytest

from aapl.corpus import IndexedLabels
from aapl.pseudolabels import (
    PseudoLabelConfig,
    generate_pseudo_labels,
    apply_pseudo_labels,
)


def labels_at(*pairs):
    return IndexedLabels("v", tuple((i, frozenset(cs)) for i, cs in pairs))


class TestForegroundRuns:
    def test_confident_run_extends_label(self):
        P = np.array([[0.9, 0.9, 0.9, 0.1, 0.1]])
        A = np.full(5, 0.5)
        cfg = PseudoLabelConfig(theta_fg=0.8, theta_bg=0.0)
        out = generate_pseudo_labels(P, A, labels_at((1, {0})), cfg)
        assert out.foreground == {0: frozenset({0}), 1: frozenset({0}), 2: frozenset({0})}
        assert out.background == set()
        assert out.anchors[0] == 1 and out.anchors[2] == 1

    def test_inconsistent_label_rejects_run(self):
        P = np.array([[0.9, 0.9, 0.9, 0.1, 0.1]])
        A = np.full(5, 0.5)
        cfg = PseudoLabelConfig(theta_fg=0.8, theta_bg=0.0)
        out = generate_pseudo_labels(P, A, labels_at((1, {0}), (2, set())), cfg)
        assert out.foreground == {}
        merged = apply_pseudo_labels(labels_at((1, {0}), (2, set())), out)
        assert merged == labels_at((1, {0}), (2, set()))

    def test_run_without_any_label_rejected(self):
        P = np.array([[0.9, 0.9, 0.1, 0.9, 0.9]])
        A = np.full(5, 0.5)
        cfg = PseudoLabelConfig(theta_fg=0.8, theta_bg=0.0)
        out = generate_pseudo_labels(P, A, labels_at((0, {0})), cfg)
        assert set(out.foreground) == {0, 1}  # the [3,5) run has no anchor

    def test_multi_class_runs_union(self):
        P = np.array(
            [
                [0.9, 0.9, 0.1, 0.1],
                [0.9, 0.9, 0.9, 0.1],
            ]
        )
        A = np.full(4, 0.5)
        cfg = PseudoLabelConfig(theta_fg=0.8, theta_bg=0.0)
        out = generate_pseudo_labels(P, A, labels_at((1, {0, 1})), cfg)
        assert out.foreground[0] == frozenset({0, 1})
        assert out.foreground[2] == frozenset({1})


class TestBackgroundRuns:
    def test_low_actionness_run_extends_background(self):
        P = np.full((1, 5), 0.5)
        A = np.array([0.01, 0.01, 0.9, 0.01, 0.01])
        cfg = PseudoLabelConfig(theta_fg=1.0, theta_bg=0.05)
        out = generate_pseudo_labels(P, A, labels_at((0, set())), cfg)
        assert out.background == {0, 1}
        assert out.foreground == {}

    def test_foreground_label_in_run_rejects(self):
        P = np.full((1, 4), 0.5)
        A = np.full(4, 0.01)
        cfg = PseudoLabelConfig(theta_fg=1.0, theta_bg=0.05)
        out = generate_pseudo_labels(P, A, labels_at((0, set()), (2, {0})), cfg)
        assert out.background == set()

    def test_foreground_wins_conflicts(self):
        # theta_bg > theta_fg lets snippet 2 qualify on both sides: class-0
        # run [0,3) anchored at label 1, background run [2,4) anchored at
        # label 3. The class run wins and disjointness holds.
        P = np.array([[0.4, 0.4, 0.4, 0.01]])
        A = np.array([0.7, 0.7, 0.2, 0.2])
        cfg = PseudoLabelConfig(theta_fg=0.3, theta_bg=0.5)
        labels = labels_at((1, {0}), (3, set()))
        out = generate_pseudo_labels(P, A, labels, cfg)
        assert set(out.foreground) == {0, 1, 2}
        assert out.background == {3}
        out.validate()


class TestDisabling:
    def test_thresholds_at_limits_reproduce_input(self):
        rng = np.random.default_rng(0)
        P = rng.uniform(0, 1, size=(3, 20))
        A = rng.uniform(0, 1, size=20)
        labels = labels_at((2, {0}), (7, set()), (13, {1, 2}))
        out = generate_pseudo_labels(P, A, labels, PseudoLabelConfig(theta_fg=1.0, theta_bg=0.0))
        assert out.foreground == {} and out.background == set()
        assert apply_pseudo_labels(labels, out) == labels

    def test_warmup_gating(self):
        cfg = PseudoLabelConfig(theta_fg=0.5, theta_bg=0.1, warmup_fraction=0.2)
        assert not cfg.active_at(0, 100)
        assert not cfg.active_at(19, 100)
        assert cfg.active_at(20, 100)
        assert not PseudoLabelConfig(enabled=False).active_at(99, 100)


class TestInvariants:
    def _random_case(self, seed):
        rng = np.random.default_rng(seed)
        C, T = 3, 30
        P = rng.uniform(0, 1, size=(C, T))
        A = rng.uniform(0, 1, size=T)
        pairs = []
        for t in sorted(rng.choice(T, size=6, replace=False)):
            if rng.random() < 0.4:
                pairs.append((int(t), frozenset()))
            else:
                pairs.append((int(t), frozenset(rng.choice(C, size=rng.integers(1, 3), replace=False).tolist())))
        return P, A, IndexedLabels("v", tuple(pairs))

    def test_original_labels_never_altered(self):
        for seed in range(10):
            P, A, labels = self._random_case(seed)
            cfg = PseudoLabelConfig(theta_fg=0.6, theta_bg=0.4)
            merged = apply_pseudo_labels(labels, generate_pseudo_labels(P, A, labels, cfg))
            merged_map = dict(merged.labels)
            for t, y in labels.labels:
                assert merged_map[t] == y

    def test_foreground_runs_respect_condition_three(self):
        for seed in range(10):
            P, A, labels = self._random_case(seed)
            cfg = PseudoLabelConfig(theta_fg=0.6, theta_bg=0.4)
            out = generate_pseudo_labels(P, A, labels, cfg)
            label_map = dict(labels.labels)
            for t, classes in out.foreground.items():
                for c in classes:
                    if t in label_map:
                        assert c in label_map[t]

    def test_background_runs_contain_no_foreground_label(self):
        for seed in range(10):
            P, A, labels = self._random_case(seed)
            cfg = PseudoLabelConfig(theta_fg=0.6, theta_bg=0.4)
            out = generate_pseudo_labels(P, A, labels, cfg)
            fg_label_indices = {t for t, y in labels.labels if y}
            assert not (out.background & fg_label_indices)

    def test_pseudo_snippets_trace_to_real_anchors(self):
        for seed in range(10):
            P, A, labels = self._random_case(seed)
            cfg = PseudoLabelConfig(theta_fg=0.55, theta_bg=0.45)
            out = generate_pseudo_labels(P, A, labels, cfg)
            label_indices = {t for t, _ in labels.labels}
            touched = (set(out.foreground) | out.background) - label_indices
            for t in touched:
                assert t in out.anchors
                assert out.anchors[t] in label_indices

    def test_label_index_out_of_range(self):
        with pytest.raises(IndexError):
            generate_pseudo_labels(
                np.full((1, 3), 0.5), np.full(3, 0.5), labels_at((5, {0})), PseudoLabelConfig()
            )
