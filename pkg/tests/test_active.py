import numpy as np
import pytest

from alsal.active import (ActiveConfig, init_state, query_elm, query_orderly,
                          query_random, query_uncertainty, run_active_learning)
from alsal.als import AlsConfig, init_embeddings
from alsal.alsdl import AlsdlConfig, alsdl_predict_positions, train_alsdl
from alsal.data import MaskedMatrix, generate_synthetic
from alsal.mlp import LossConfig, MlpTrainConfig


def fast_model_cfg(seed=0, als_epochs=40, mlp_epochs=40):
    return AlsdlConfig(
        als=AlsConfig(d=2, epochs=als_epochs, seed=seed),
        mlp_train=MlpTrainConfig(epochs=mlp_epochs, seed=seed + 1),
        loss=LossConfig(),
        hidden_sizes=(6, 3))


def brute_force_elm(state, model, cfg, inner_seed):
    """Exhaustive per-candidate retrain with per-element update loops.

    Independent of the engine: the inner model is trained by explicit
    elementwise evaluation of the two derivative formulas (x step first,
    w gradient recomputed after x moves), and the expected loss is an
    explicit loop over the scoring set.
    """
    matrix = state.matrix
    m, n = matrix.shape
    candidates = sorted(state.pool)
    pool_pred = dict(zip(state.pool,
                         alsdl_predict_positions(model, state.pool)))
    d = cfg.model_cfg.als.d
    alpha = cfg.model_cfg.als.learning_rate
    best = None
    for cand in candidates:
        train_set = {p: matrix.values[p] for p in state.labeled}
        train_set[cand] = pool_pred[cand]

        init = init_embeddings(m, n, AlsConfig(
            d=d, seed=inner_seed, init_scale=cfg.model_cfg.als.init_scale))
        x = [[init.x[i, l] for l in range(d)] for i in range(m)]
        w = [[init.w[l, j] for j in range(n)] for l in range(d)]
        for _ in range(cfg.elm_inner_epochs):
            x_new = [row[:] for row in x]
            for i in range(m):
                for k in range(d):
                    g = 0.0
                    for j in range(n):
                        if (i, j) in train_set:
                            resid = sum(x[i][l] * w[l][j]
                                        for l in range(d)) - train_set[(i, j)]
                            g += resid * w[k][j]
                    x_new[i][k] = x[i][k] - alpha * g
            x = x_new
            w_new = [row[:] for row in w]
            for k in range(d):
                for j in range(n):
                    g = 0.0
                    for i in range(m):
                        if (i, j) in train_set:
                            resid = sum(x[i][l] * w[l][j]
                                        for l in range(d)) - train_set[(i, j)]
                            g += resid * x[i][k]
                    w_new[k][j] = w[k][j] - alpha * g
            w = w_new

        sq_sum, count = 0.0, 0
        for p in state.labeled:
            pred = sum(x[p[0]][l] * w[l][p[1]] for l in range(d))
            sq_sum += (pred - matrix.values[p]) ** 2
            count += 1
        for p in state.pool:
            if p == cand:
                continue
            pred = sum(x[p[0]][l] * w[l][p[1]] for l in range(d))
            sq_sum += (pred - pool_pred[p]) ** 2
            count += 1
        score = (sq_sum / count) ** 0.5
        if best is None or score < best[0]:
            best = (score, cand)
    return best[1]


class TestInitState:
    def test_budgets(self):
        mat, _ = generate_synthetic(35, 34, 5, 0.0, seed=0)
        cfg = ActiveConfig(n_init=40, seed=0)
        state = init_state(mat, cfg)
        assert len(state.labeled) == 40
        assert len(state.pool) == 1150
        assert set(state.labeled).isdisjoint(state.pool)

    def test_full_budget_empties_pool(self):
        mat, _ = generate_synthetic(3, 3, 1, 0.0, seed=1)
        state = init_state(mat, ActiveConfig(n_init=9, seed=0))
        assert state.pool == []

    def test_deterministic(self):
        mat, _ = generate_synthetic(6, 6, 2, 0.0, seed=2)
        cfg = ActiveConfig(n_init=10, seed=5)
        assert init_state(mat, cfg).labeled == init_state(mat, cfg).labeled

    def test_budget_exceeds_pool(self):
        mat, _ = generate_synthetic(2, 2, 1, 0.0, seed=3)
        with pytest.raises(ValueError):
            init_state(mat, ActiveConfig(n_init=5, seed=0))


class TestQueryOrderly:
    def _state(self, m=2, n=2, pool=None):
        mat, _ = generate_synthetic(m, n, 1, 0.0, seed=4)
        state = init_state(mat, ActiveConfig(n_init=1, seed=0))
        if pool is not None:
            state.pool = pool
            state.labeled = [p for p in mat.observed_positions()
                             if p not in pool]
        return state

    def test_row_major_from_start(self):
        state = self._state(pool=[(0, 0), (0, 1), (1, 0), (1, 1)])
        assert query_orderly(state, 2) == [(0, 0), (0, 1)]

    def test_whole_pool_when_n_large(self):
        state = self._state(pool=[(0, 1), (1, 0)])
        assert query_orderly(state, 10) == [(0, 1), (1, 0)]

    def test_skips_labeled(self):
        state = self._state(pool=[(0, 1), (1, 0), (1, 1)])
        assert query_orderly(state, 1) == [(0, 1)]

    def test_column_major_option(self):
        state = self._state(pool=[(0, 1), (1, 0)])
        assert query_orderly(state, 1, column_major=True) == [(1, 0)]

    def test_empty_pool(self):
        state = self._state(pool=[])
        with pytest.raises(ValueError):
            query_orderly(state, 1)


class TestQueryRandom:
    def test_full_pool_is_permutation(self):
        mat, _ = generate_synthetic(3, 3, 1, 0.0, seed=5)
        state = init_state(mat, ActiveConfig(n_init=2, seed=0))
        got = query_random(state, len(state.pool), seed=1)
        assert sorted(got) == sorted(state.pool)

    def test_single_item_pool(self):
        mat, _ = generate_synthetic(2, 2, 1, 0.0, seed=6)
        state = init_state(mat, ActiveConfig(n_init=3, seed=0))
        assert query_random(state, 1, seed=0) == state.pool

    def test_deterministic(self):
        mat, _ = generate_synthetic(4, 4, 1, 0.0, seed=7)
        state = init_state(mat, ActiveConfig(n_init=4, seed=0))
        assert query_random(state, 3, seed=2) == query_random(state, 3, seed=2)


class TestQueryUncertainty:
    def test_closest_to_boundary(self):
        mat, _ = generate_synthetic(1, 3, 1, 0.0, seed=8)
        mat.values[:] = [[0.5, -0.01, 0.3]]
        state = init_state(mat, ActiveConfig(n_init=1, seed=0))
        state.labeled, state.pool = [], [(0, 0), (0, 1), (0, 2)]

        class Stub:
            pass
        model = Stub()
        import alsal.active as active_mod
        real = active_mod.alsdl_mod.alsdl_predict_positions
        try:
            active_mod.alsdl_mod.alsdl_predict_positions = \
                lambda m, pos: np.array([mat.values[p] for p in pos])
            assert query_uncertainty(state, model, 1) == [(0, 1)]
            assert query_uncertainty(state, model, 3) == [(0, 1), (0, 2), (0, 0)]
        finally:
            active_mod.alsdl_mod.alsdl_predict_positions = real

    def test_boundary_tie_broken_row_major(self):
        mat, _ = generate_synthetic(2, 2, 1, 0.0, seed=9)
        state = init_state(mat, ActiveConfig(n_init=1, seed=0))
        state.labeled, state.pool = [], [(1, 1), (0, 1)]
        import alsal.active as active_mod
        real = active_mod.alsdl_mod.alsdl_predict_positions
        try:
            active_mod.alsdl_mod.alsdl_predict_positions = \
                lambda m, pos: np.zeros(len(pos))
            assert query_uncertainty(state, None, 2) == [(0, 1), (1, 1)]
        finally:
            active_mod.alsdl_mod.alsdl_predict_positions = real


class TestQueryElm:
    def test_single_candidate_pool(self):
        mat, _ = generate_synthetic(2, 2, 1, 0.0, seed=10)
        state = init_state(mat, ActiveConfig(n_init=3, seed=0))
        assert len(state.pool) == 1
        cfg = ActiveConfig(n_init=3, model_cfg=fast_model_cfg(),
                           elm_inner_epochs=20, seed=0)
        model, _ = train_alsdl(mat.with_mask(state.labeled),
                               fast_model_cfg(als_epochs=20, mlp_epochs=20))
        assert query_elm(state, model, 1, cfg) == state.pool

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_brute_force_oracle(self, seed):
        mat, _ = generate_synthetic(4, 4, 1, 0.0, seed=seed)
        cfg = ActiveConfig(n_init=8, model_cfg=fast_model_cfg(seed=seed + 30),
                           elm_inner_epochs=50, seed=seed)
        state = init_state(mat, cfg)
        model, _ = train_alsdl(mat.with_mask(state.labeled),
                               cfg.model_cfg)
        got = query_elm(state, model, 1, cfg, inner_seed=seed + 77)
        expected = brute_force_elm(state, model, cfg, inner_seed=seed + 77)
        assert got == [expected]


class TestElmSubsampling:
    def test_subsample_restricts_candidates(self):
        mat, _ = generate_synthetic(4, 4, 1, 0.0, seed=20)
        cfg = ActiveConfig(n_init=8, model_cfg=fast_model_cfg(seed=60),
                           elm_inner_epochs=20, elm_candidate_subsample=3,
                           seed=0)
        state = init_state(mat, cfg)
        model, _ = train_alsdl(mat.with_mask(state.labeled), cfg.model_cfg)
        got = query_elm(state, model, 3, cfg, inner_seed=5)
        assert len(got) == 3
        assert set(got) <= set(state.pool)

    def test_subsample_deterministic(self):
        mat, _ = generate_synthetic(4, 4, 1, 0.0, seed=21)
        cfg = ActiveConfig(n_init=6, model_cfg=fast_model_cfg(seed=61),
                           elm_inner_epochs=20, elm_candidate_subsample=4,
                           seed=0)
        state = init_state(mat, cfg)
        model, _ = train_alsdl(mat.with_mask(state.labeled), cfg.model_cfg)
        a = query_elm(state, model, 2, cfg, inner_seed=9)
        b = query_elm(state, model, 2, cfg, inner_seed=9)
        assert a == b


class TestRunActiveLearning:
    def test_point_count_and_budgets(self):
        mat, _ = generate_synthetic(6, 6, 2, 0.0, seed=11)
        cfg = ActiveConfig(n_init=4, n_per_query=4, n_max_query=3,
                           strategy="random", model_cfg=fast_model_cfg(),
                           seed=1)
        curve, model = run_active_learning(mat, cfg)
        assert len(curve) == 4
        assert [pt.n_labeled for pt in curve] == [4, 8, 12, 16]
        assert [pt.round for pt in curve] == [0, 1, 2, 3]

    def test_zero_max_query_single_point(self):
        mat, _ = generate_synthetic(5, 5, 2, 0.0, seed=12)
        cfg = ActiveConfig(n_init=5, n_per_query=5, n_max_query=0,
                           strategy="orderly", model_cfg=fast_model_cfg(),
                           seed=0)
        curve, _ = run_active_learning(mat, cfg)
        assert len(curve) == 1
        assert curve[0].n_labeled == 5

    def test_deterministic(self):
        mat, _ = generate_synthetic(5, 5, 2, 0.1, seed=13)
        cfg = ActiveConfig(n_init=5, n_per_query=5, n_max_query=2,
                           strategy="random", model_cfg=fast_model_cfg(),
                           seed=3)
        c1, _ = run_active_learning(mat, cfg)
        c2, _ = run_active_learning(mat, cfg)
        assert c1 == c2

    def test_pool_exhaustion_stops_early(self):
        mat, _ = generate_synthetic(3, 3, 1, 0.0, seed=14)
        cfg = ActiveConfig(n_init=3, n_per_query=6, n_max_query=5,
                           strategy="orderly", model_cfg=fast_model_cfg(),
                           seed=0)
        curve, _ = run_active_learning(mat, cfg)
        assert curve[-1].n_labeled == 9
        assert len(curve) == 2

    @pytest.mark.parametrize("strategy",
                             ["orderly", "random", "uncertainty", "elm"])
    def test_conservation_no_double_query(self, strategy):
        mat, _ = generate_synthetic(4, 4, 2, 0.0, seed=15)
        cfg = ActiveConfig(n_init=4, n_per_query=3, n_max_query=2,
                           strategy=strategy, model_cfg=fast_model_cfg(),
                           elm_inner_epochs=10, seed=2)
        curve, _ = run_active_learning(mat, cfg)
        assert [pt.n_labeled for pt in curve] == [4, 7, 10]
