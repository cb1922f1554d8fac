"""Scoring model forward/backward/Adam against independent oracles."""

import math

import numpy as np
import pytest

from aapl.model import (
    AdamState,
    ModelParams,
    ParamGrads,
    adam_step,
    backward,
    forward,
    init_params,
    load_checkpoint,
    save_checkpoint,
    sigmoid,
)


def forward_oracle(X, params):
    """Straight-line scalar-loop reimplementation of the eval-mode forward."""
    D, T = X.shape
    half = D // 2
    C = params.cls_w.shape[0]
    Z = np.zeros((D, T))
    for d_out in range(D):
        for t in range(T):
            acc = params.embed_b[d_out]
            for d_in in range(D):
                for k in range(3):
                    src = t + k - 1
                    if 0 <= src < T:
                        acc += params.embed_w[d_out, d_in, k] * X[d_in, src]
            Z[d_out, t] = max(acc, 0.0)
    S = np.zeros((C, T))
    A = np.zeros(T)
    for c in range(C):
        for t in range(T):
            acc = params.cls_b[c]
            for d in range(half):
                acc += params.cls_w[c, d] * Z[d, t]
            S[c, t] = 1.0 / (1.0 + math.exp(-acc))
    for t in range(T):
        acc = params.act_b
        for d in range(half):
            acc += params.act_w[d] * Z[half + d, t]
        A[t] = 1.0 / (1.0 + math.exp(-acc))
    return Z, S, A, A[None, :] * S


def perturb(params, name, index, delta):
    out = params.copy()
    arr = dict(out.named_arrays())[name]
    if name == "act_b":
        out.act_b = float(out.act_b) + delta
    else:
        getattr(out, name).flat[index] += delta
    return out


class TestInit:
    def test_deterministic(self):
        a = init_params(4, 2, seed=11)
        b = init_params(4, 2, seed=11)
        for (_, x), (_, y) in zip(a.named_arrays(), b.named_arrays()):
            np.testing.assert_array_equal(x, y)

    def test_bounds_and_zero_biases(self):
        p = init_params(4, 2, seed=0)
        assert np.all(np.abs(p.embed_w) <= (1 / 12) ** 0.5)
        assert np.all(np.abs(p.cls_w) <= (1 / 2) ** 0.5)
        assert np.all(p.embed_b == 0) and np.all(p.cls_b == 0) and p.act_b == 0.0

    def test_odd_dims_rejected(self):
        with pytest.raises(ValueError):
            init_params(5, 2, seed=0)


class TestForward:
    def test_zero_params_give_half_scores(self):
        D, C, T = 4, 3, 5
        params = ModelParams(
            np.zeros((D, D, 3)), np.zeros(D), np.zeros((C, D // 2)), np.zeros(C),
            np.zeros(D // 2), 0.0,
        )
        X = np.random.default_rng(0).standard_normal((D, T))
        out = forward(X, params)
        np.testing.assert_array_equal(out.Z, np.zeros((D, T)))
        np.testing.assert_array_equal(out.S, np.full((C, T), 0.5))
        np.testing.assert_array_equal(out.A, np.full(T, 0.5))
        np.testing.assert_array_equal(out.P, np.full((C, T), 0.25))

    def test_eval_mode_is_pure(self):
        rng = np.random.default_rng(1)
        params = init_params(6, 2, seed=1)
        X = rng.standard_normal((6, 4))
        a = forward(X, params, dropout_rate=0.7, mode="eval", seed=1)
        b = forward(X, params, dropout_rate=0.7, mode="eval", seed=999)
        np.testing.assert_array_equal(a.P, b.P)
        assert a.drop_mask_cls is None

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(2)
        params = init_params(4, 2, seed=3)
        params.embed_b[:] = rng.standard_normal(4) * 0.1
        params.cls_b[:] = rng.standard_normal(2) * 0.1
        params.act_b = 0.05
        X = rng.standard_normal((4, 3))
        out = forward(X, params)
        Z, S, A, P = forward_oracle(X, params)
        np.testing.assert_allclose(out.Z, Z, atol=1e-12)
        np.testing.assert_allclose(out.S, S, atol=1e-12)
        np.testing.assert_allclose(out.A, A, atol=1e-12)
        np.testing.assert_allclose(out.P, P, atol=1e-12)

    def test_fused_scores_exact_product(self):
        rng = np.random.default_rng(3)
        params = init_params(8, 3, seed=4)
        X = rng.standard_normal((8, 6))
        out = forward(X, params, dropout_rate=0.5, mode="train", seed=7)
        np.testing.assert_array_equal(out.P, out.A[None, :] * out.S)
        assert np.all((out.S > 0) & (out.S < 1))
        assert np.all((out.A > 0) & (out.A < 1))

    def test_train_mode_deterministic_under_seed(self):
        rng = np.random.default_rng(4)
        params = init_params(6, 2, seed=5)
        X = rng.standard_normal((6, 5))
        a = forward(X, params, dropout_rate=0.7, mode="train", seed=20)
        b = forward(X, params, dropout_rate=0.7, mode="train", seed=20)
        np.testing.assert_array_equal(a.P, b.P)

    def test_shape_mismatch_rejected(self):
        params = init_params(4, 2, seed=0)
        with pytest.raises(ValueError):
            forward(np.zeros((6, 3)), params)


class TestBackward:
    def _fd_check(self, D, C, T, seed, mode="eval", dropout=0.0, with_z=False):
        rng = np.random.default_rng(seed)
        params = init_params(D, C, seed=seed)
        params.embed_b[:] = 0.1 * rng.standard_normal(D)
        X = rng.standard_normal((D, T))
        w_s = rng.standard_normal((C, T))
        w_a = rng.standard_normal(T)
        w_z = rng.standard_normal((D, T)) if with_z else None

        def loss(p):
            out = forward(X, p, dropout_rate=dropout, mode=mode, seed=123)
            val = float((w_s * out.S).sum() + (w_a * out.A).sum())
            if w_z is not None:
                val += float((w_z * out.Z).sum())
            return val

        out = forward(X, params, dropout_rate=dropout, mode=mode, seed=123)
        grads = backward(X, params, out, upstream_s=w_s, upstream_a=w_a, upstream_z=w_z)
        h = 1e-4
        worst = 0.0
        for name, arr in grads.named_arrays():
            for idx in range(arr.size):
                up = loss(perturb(params, name, idx, h))
                down = loss(perturb(params, name, idx, -h))
                fd = (up - down) / (2 * h)
                scale = max(abs(fd), abs(arr.flat[idx]), 1e-8)
                worst = max(worst, abs(fd - arr.flat[idx]) / scale)
        assert worst < 1e-4, f"max relative gradient error {worst}"

    def test_zero_upstream_gives_zero_grads(self):
        rng = np.random.default_rng(5)
        params = init_params(4, 2, seed=6)
        X = rng.standard_normal((4, 3))
        out = forward(X, params)
        grads = backward(
            X, params, out, upstream_s=np.zeros_like(out.S), upstream_a=np.zeros_like(out.A)
        )
        for _, arr in grads.named_arrays():
            np.testing.assert_array_equal(arr, np.zeros_like(arr))

    def test_gradients_match_finite_differences(self):
        self._fd_check(4, 2, 3, seed=7)
        self._fd_check(6, 3, 5, seed=8)

    def test_gradients_with_dropout_mask_replay(self):
        self._fd_check(4, 2, 4, seed=9, mode="train", dropout=0.5)

    def test_gradients_through_embedding_upstream(self):
        self._fd_check(4, 2, 3, seed=10, with_z=True)

    def test_linearity_in_upstream(self):
        rng = np.random.default_rng(11)
        params = init_params(4, 2, seed=12)
        X = rng.standard_normal((4, 4))
        out = forward(X, params)
        u1_s, u2_s = rng.standard_normal((2, 2, 4))
        u1_a, u2_a = rng.standard_normal((2, 4))
        g1 = backward(X, params, out, upstream_s=u1_s, upstream_a=u1_a)
        g2 = backward(X, params, out, upstream_s=u2_s, upstream_a=u2_a)
        g_sum = backward(X, params, out, upstream_s=u1_s + u2_s, upstream_a=u1_a + u2_a)
        for (_, a), (_, b), (_, s) in zip(
            g1.named_arrays(), g2.named_arrays(), g_sum.named_arrays()
        ):
            np.testing.assert_allclose(a + b, s, atol=1e-12)


class TestAdam:
    def test_zero_grads_leave_params_unchanged(self):
        params = init_params(4, 2, seed=0)
        state = AdamState.for_params(params, learning_rate=0.1)
        new = adam_step(params, ParamGrads.zeros_like(params), state)
        for (_, a), (_, b) in zip(params.named_arrays(), new.named_arrays()):
            np.testing.assert_array_equal(a, b)

    def test_first_step_closed_form(self):
        # One scalar parameter with gradient 1: bias-corrected m/sqrt(v) = 1,
        # so the step is lr/(1 + eps) below the start.
        params = ModelParams(
            np.zeros((2, 2, 3)), np.zeros(2), np.zeros((1, 1)), np.zeros(1), np.zeros(1), 1.0
        )
        grads = ParamGrads.zeros_like(params)
        grads.act_b = 1.0
        state = AdamState.for_params(params, learning_rate=0.1)
        new = adam_step(params, grads, state)
        assert new.act_b == pytest.approx(1.0 - 0.1, abs=1e-8)

    def test_weight_decay_pulls_toward_zero(self):
        params = init_params(4, 2, seed=1)
        state = AdamState.for_params(params, learning_rate=0.01, weight_decay=0.1)
        new = adam_step(params, ParamGrads.zeros_like(params), state)
        moved = dict(new.named_arrays())["cls_w"]
        orig = params.cls_w
        nonzero = np.abs(orig) > 1e-12
        assert np.all(np.abs(moved[nonzero]) < np.abs(orig[nonzero]))

    def test_non_finite_grads_rejected(self):
        params = init_params(4, 2, seed=2)
        grads = ParamGrads.zeros_like(params)
        grads.cls_w[0, 0] = np.nan
        state = AdamState.for_params(params)
        with pytest.raises(ValueError, match="non-finite"):
            adam_step(params, grads, state)

    def test_trajectory_deterministic(self):
        def run():
            rng = np.random.default_rng(33)
            params = init_params(4, 2, seed=3)
            state = AdamState.for_params(params, learning_rate=0.05)
            for _ in range(5):
                grads = ParamGrads.zeros_like(params)
                grads.cls_w[:] = rng.standard_normal(params.cls_w.shape)
                params = adam_step(params, grads, state)
            return params

        a, b = run(), run()
        for (_, x), (_, y) in zip(a.named_arrays(), b.named_arrays()):
            np.testing.assert_array_equal(x, y)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        params = init_params(6, 3, seed=4)
        state = AdamState.for_params(params, learning_rate=0.01, weight_decay=0.001)
        grads = ParamGrads.zeros_like(params)
        grads.act_w[:] = 0.5
        params = adam_step(params, grads, state)
        path = tmp_path / "ckpt.json"
        save_checkpoint(path, params, adam=state, iteration=17, prototypes={"0": [1.0, 2.0]})
        loaded = load_checkpoint(path)
        assert loaded.iteration == 17
        assert loaded.prototypes == {"0": [1.0, 2.0]}
        for (_, a), (_, b) in zip(params.named_arrays(), loaded.params.named_arrays()):
            np.testing.assert_array_equal(a, b)
        assert loaded.adam.step == 1
        np.testing.assert_array_equal(loaded.adam.m["act_w"], state.m["act_w"])


class TestSigmoid:
    def test_extremes_do_not_overflow(self):
        vals = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
        assert vals[0] == 0.0 and vals[1] == 0.5 and vals[2] == 1.0

    def test_matches_naive_formula_in_safe_range(self):
        x = np.linspace(-30, 30, 101)
        np.testing.assert_allclose(sigmoid(x), 1 / (1 + np.exp(-x)), rtol=1e-12)
