"""Pool-based active learning over a fully measured (retrospective) matrix.

The ground-truth matrix plays the oracle: queried positions reveal their
true values. Four query strategies are available: orderly (row-major),
random, uncertainty (closest to the boundary), and expected loss
minimization (ELM), which retrains a cheap factor-only model per candidate
on the labeled set plus the candidate's predicted label and scores it by
expected loss over true-plus-predicted labels.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import als as als_mod
from . import alsdl as alsdl_mod
from .alsdl import AlsdlConfig
from .metrics import rmse, boundary_accuracy


@dataclass(frozen=True)
class ActiveConfig:
    n_init: int = 40
    n_per_query: int = 40
    n_max_query: int = 8
    strategy: str = "elm"  # orderly | random | uncertainty | elm
    model_cfg: AlsdlConfig = field(default_factory=AlsdlConfig)
    elm_inner_epochs: int = 200
    # when set, ELM scores only a seeded random subset of the pool
    elm_candidate_subsample: int = None
    orderly_column_major: bool = False
    seed: int = 0


@dataclass(frozen=True)
class LearningCurvePoint:
    round: int
    n_labeled: int
    full_rmse: float
    full_accuracy: float


@dataclass
class ActiveState:
    matrix: object  # MaskedMatrix, all labels known
    labeled: list  # ordered positions, the training set D
    pool: list  # ordered positions, the unlabeled pool U
    round: int = 0
    history: list = field(default_factory=list)


def _row_major_key(pos, n_cols):
    return pos[0] * n_cols + pos[1]


def init_state(matrix, cfg):
    positions = matrix.observed_positions()
    if cfg.n_init > len(positions):
        raise ValueError(
            f"n_init = {cfg.n_init} exceeds {len(positions)} observed positions")
    rng = np.random.default_rng(cfg.seed)
    picked = rng.choice(len(positions), size=cfg.n_init, replace=False)
    labeled = [positions[i] for i in picked]
    chosen = set(labeled)
    pool = [p for p in positions if p not in chosen]
    return ActiveState(matrix=matrix, labeled=labeled, pool=pool)


def query_orderly(state, n, column_major=False):
    if not state.pool:
        raise ValueError("empty pool")
    n_cols = state.matrix.shape[1]
    key = ((lambda p: (p[1], p[0])) if column_major
           else (lambda p: _row_major_key(p, n_cols)))
    return sorted(state.pool, key=key)[:min(n, len(state.pool))]


def query_random(state, n, seed):
    if not state.pool:
        raise ValueError("empty pool")
    rng = np.random.default_rng(seed)
    take = min(n, len(state.pool))
    picked = rng.choice(len(state.pool), size=take, replace=False)
    return [state.pool[i] for i in picked]


def query_uncertainty(state, model, n, boundary=0.0):
    """Pool positions whose predictions lie closest to the boundary."""
    if not state.pool:
        raise ValueError("empty pool")
    n_cols = state.matrix.shape[1]
    preds = alsdl_mod.alsdl_predict_positions(model, state.pool)
    order = sorted(range(len(state.pool)),
                   key=lambda i: (abs(preds[i] - boundary),
                                  _row_major_key(state.pool[i], n_cols)))
    return [state.pool[i] for i in order[:min(n, len(state.pool))]]


def expected_losses(state, model, cfg, inner_seed):
    """ELM score per pool candidate, in row-major candidate order.

    For candidate x+: label it with the current model's prediction, retrain
    a factor-only model on D plus the pseudo-labeled candidate for
    cfg.elm_inner_epochs epochs, and evaluate its RMSE over D's true labels
    joined with current-model predictions on the other pool positions. All
    candidates share the same fresh init seed so scores differ only through
    the candidate.
    """
    matrix = state.matrix
    n_cols = matrix.shape[1]
    candidates = sorted(state.pool, key=lambda p: _row_major_key(p, n_cols))
    if (cfg.elm_candidate_subsample is not None
            and cfg.elm_candidate_subsample < len(candidates)):
        rng = np.random.default_rng(inner_seed)
        keep = rng.choice(len(candidates), size=cfg.elm_candidate_subsample,
                          replace=False)
        candidates = [candidates[i] for i in sorted(keep)]
    pool_preds = dict(zip(state.pool,
                          alsdl_mod.alsdl_predict_positions(model, state.pool)))

    inner_cfg = replace(cfg.model_cfg.als, epochs=cfg.elm_inner_epochs,
                        seed=inner_seed)
    base_values = np.zeros(matrix.shape)
    base_mask = np.zeros(matrix.shape)
    for i, j in state.labeled:
        base_values[i, j] = matrix.values[i, j]
        base_mask[i, j] = 1.0

    scores = []
    for cand in candidates:
        values = base_values.copy()
        mask = base_mask.copy()
        values[cand] = pool_preds[cand]
        mask[cand] = 1.0
        train_matrix = replace_matrix(matrix, values, mask)
        emb, _ = als_mod.train_als(train_matrix, inner_cfg,
                                   record_history=False)
        full = emb.x @ emb.w

        score_pos = state.labeled + [p for p in state.pool if p != cand]
        preds = np.array([full[p] for p in score_pos])
        labels = np.array([matrix.values[p] for p in state.labeled]
                          + [pool_preds[p] for p in state.pool if p != cand])
        scores.append(rmse(preds, labels))
    return candidates, scores


def replace_matrix(matrix, values, mask):
    from .data import MaskedMatrix
    return MaskedMatrix(values, mask, list(matrix.cell_index),
                        list(matrix.molecule_index), matrix.target)


def query_elm(state, model, n, cfg, inner_seed=0):
    if not state.pool:
        raise ValueError("empty pool")
    candidates, scores = expected_losses(state, model, cfg, inner_seed)
    order = sorted(range(len(candidates)), key=lambda i: (scores[i], i))
    return [candidates[i] for i in order[:min(n, len(candidates))]]


def _select(state, model, cfg, round_seed):
    if cfg.strategy == "orderly":
        return query_orderly(state, cfg.n_per_query, cfg.orderly_column_major)
    if cfg.strategy == "random":
        return query_random(state, cfg.n_per_query, seed=round_seed)
    if cfg.strategy == "uncertainty":
        return query_uncertainty(state, model, cfg.n_per_query)
    if cfg.strategy == "elm":
        return query_elm(state, model, cfg.n_per_query, cfg,
                         inner_seed=round_seed)
    raise ValueError(f"unknown strategy {cfg.strategy!r}")


def _round_seed(base_seed, rnd):
    # distinct deterministic stream per round
    return int(np.random.SeedSequence([base_seed, rnd]).generate_state(1)[0])


def run_active_learning(matrix, cfg):
    """Full scheme: init, then train/record/query for n_max_query rounds.

    Returns the learning curve (one point per training round, evaluated on
    every observed position against ground truth) and the final model.
    """
    state = init_state(matrix, cfg)
    positions = matrix.observed_positions()
    truths = np.array([matrix.values[p] for p in positions])

    model = None
    for rnd in range(cfg.n_max_query + 1):
        state.round = rnd
        model_seed = _round_seed(cfg.seed, 2 * rnd)
        model_cfg = replace(
            cfg.model_cfg,
            als=replace(cfg.model_cfg.als, seed=model_seed),
            mlp_train=replace(cfg.model_cfg.mlp_train, seed=model_seed + 1))
        train_matrix = matrix.with_mask(state.labeled)
        model, _ = alsdl_mod.train_alsdl(train_matrix, model_cfg,
                                         record_history=False)

        preds = alsdl_mod.alsdl_predict_positions(model, positions)
        point = LearningCurvePoint(
            round=rnd, n_labeled=len(state.labeled),
            full_rmse=rmse(preds, truths),
            full_accuracy=boundary_accuracy(preds, truths))
        state.history.append(point)

        if rnd == cfg.n_max_query or not state.pool:
            break
        picks = _select(state, model, cfg, _round_seed(cfg.seed, 2 * rnd + 1))
        picked = set(picks)
        state.pool = [p for p in state.pool if p not in picked]
        state.labeled = state.labeled + list(picks)
    return state.history, model
