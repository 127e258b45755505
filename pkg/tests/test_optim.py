import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marolab.game import Faction
from marolab.optim import (LossConfig, Method, TrainConfig, TrainingError, batch_grad, batch_loss,
                           sample_loss, sft_grad, sft_loss, sigmoid, train)
from marolab.policy import NUM_FEATURES, score
from marolab.rollout import Dataset, Label, TrainingSample, TurnRecord

D, U = Label.DESIRABLE, Label.UNDESIRABLE
ZERO = np.zeros(NUM_FEATURES)


def _sample(feats, idx=0, label=D, credit=1.0, weight=1.0):
    feats = np.asarray(feats, float)
    return TrainingSample(TurnRecord(0, 1, 0, Faction.KILLER, feats, idx, 0.0), label, credit, weight)


def _two_action_sample(label=D, **kw):
    feats = np.zeros((2, NUM_FEATURES))
    feats[0, 0] = feats[1, 1] = 1.0
    return _sample(feats, 0, label, **kw)


def _random_sample(rng):
    n = int(rng.integers(2, 9))
    feats = rng.normal(size=(n, NUM_FEATURES))
    return _sample(feats, int(rng.integers(n)), D if rng.random() < 0.5 else U,
                   float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.2, 3.0)))


def rel_err(a, b, floor=1e-8):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def fd_grad(f, theta, h=1e-5):
    g = np.zeros_like(theta)
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def test_symmetric_start_half():
    for label in (D, U):
        assert sample_loss(ZERO, ZERO, _two_action_sample(label), LossConfig()) == 0.5


def test_loss_at_known_gap():
    # lp(theta) = -1 and lp(ref) = -3 for the chosen action: a log-prob gap of exactly 2
    theta = np.zeros(NUM_FEATURES)
    theta[1] = math.log(math.e - 1)
    ref = np.zeros(NUM_FEATURES)
    ref[1] = math.log(math.e ** 3 - 1)
    value = sample_loss(theta, ref, _two_action_sample(D), LossConfig(beta=0.1))
    assert value == pytest.approx(1 / (1 + math.exp(0.2)), abs=1e-12)
    assert value == pytest.approx(0.450166, abs=1e-6)


def test_loss_saturation():
    theta = np.zeros(NUM_FEATURES)
    theta[0] = 60.0  # chosen action nearly certain, so r >> 0
    cfg = LossConfig(beta=50.0, lambda_u=2.5)
    assert sample_loss(theta, ZERO, _two_action_sample(D), cfg) < 1e-12
    assert sample_loss(theta, ZERO, _two_action_sample(U), cfg) == pytest.approx(2.5, abs=1e-12)


def test_loss_scales_with_mass():
    s = _two_action_sample(D, credit=0.5, weight=3.0)
    assert sample_loss(ZERO, ZERO, s) == 0.5 * 1.5
    assert batch_loss(ZERO, ZERO, [s]) == 0.5


def test_batch_loss_duplication_invariant():
    rng = np.random.default_rng(0)
    s = _random_sample(rng)
    theta = rng.normal(size=NUM_FEATURES)
    assert batch_loss(theta, ZERO, [s, s]) == pytest.approx(batch_loss(theta, ZERO, [s]), rel=1e-15)


def test_batch_symmetric_lambda_mix():
    cfg = LossConfig(lambda_d=2.0, lambda_u=1.0)
    samples = [_two_action_sample(D), _two_action_sample(U, credit=0.5)]
    # mass-weighted mix: (2*0.5*1 + 1*0.5*0.5) / 1.5
    assert batch_loss(ZERO, ZERO, samples, cfg) == pytest.approx((1.0 + 0.25) / 1.5, rel=1e-15)


def test_empty_batch():
    with pytest.raises(TrainingError, match="empty"):
        batch_loss(ZERO, ZERO, [])
    with pytest.raises(TrainingError, match="empty"):
        batch_grad(ZERO, ZERO, [])


def test_grad_sign_at_symmetric_point():
    s = _two_action_sample(D, credit=0.7)
    cfg = LossConfig(beta=0.1, z0=0.3)
    g = batch_grad(ZERO, ZERO, [s], cfg)
    sp = sigmoid(-cfg.z0) * (1 - sigmoid(-cfg.z0))
    expected = -(cfg.lambda_d * cfg.beta * sp) * score(ZERO, s.turn.features, 0)
    np.testing.assert_allclose(g, expected, atol=1e-15)
    # a descent step raises the chosen log-prob
    assert score(ZERO, s.turn.features, 0) @ (-g) > 0


def test_single_action_zero_grad():
    s = _sample(np.ones((1, NUM_FEATURES)))
    assert np.all(batch_grad(np.ones(NUM_FEATURES), ZERO, [s]) == 0)


@pytest.mark.parametrize("draw", range(50))
def test_batch_grad_finite_differences(draw):
    rng = np.random.default_rng(1000 + draw)
    samples = [_random_sample(rng) for _ in range(int(rng.integers(1, 6)))]
    theta, ref = rng.normal(size=NUM_FEATURES), rng.normal(size=NUM_FEATURES) * 0.5
    cfg = LossConfig(beta=float(rng.uniform(0.05, 2.0)), lambda_d=float(rng.uniform(0.5, 2)),
                     lambda_u=float(rng.uniform(0.5, 2)), z0=float(rng.uniform(-0.5, 0.5)))
    analytic = batch_grad(theta, ref, samples, cfg)
    numeric = fd_grad(lambda t: batch_loss(t, ref, samples, cfg), theta)
    assert np.all(rel_err(analytic, numeric) <= 1e-4)


def test_sft_uniform_nine_actions():
    s = _sample(np.zeros((9, NUM_FEATURES)), 4, D)
    assert sft_loss(ZERO, [s]) == pytest.approx(math.log(9), abs=1e-12)
    assert sft_loss(ZERO, [s]) == pytest.approx(2.19722, abs=1e-5)


def test_sft_ignores_undesirable():
    rng = np.random.default_rng(5)
    pos, neg = _random_sample(rng), _random_sample(rng)
    pos, neg = replace(pos, label=D), replace(neg, label=U)
    theta = rng.normal(size=NUM_FEATURES)
    assert sft_loss(theta, [pos, neg]) == sft_loss(theta, [pos])


def test_sft_requires_positive():
    with pytest.raises(TrainingError, match="no positive samples"):
        sft_loss(ZERO, [_two_action_sample(U)])


@pytest.mark.parametrize("draw", range(50))
def test_sft_grad_finite_differences(draw):
    rng = np.random.default_rng(2000 + draw)
    samples = [replace(_random_sample(rng), label=D)] + [_random_sample(rng) for _ in range(3)]
    theta = rng.normal(size=NUM_FEATURES)
    analytic = sft_grad(theta, samples)
    numeric = fd_grad(lambda t: sft_loss(t, samples), theta)
    assert np.all(rel_err(analytic, numeric) <= 1e-4)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([D, U]))
def test_monotone_link(seed, label):
    rng = np.random.default_rng(seed)
    s = replace(_random_sample(rng), label=label)
    chosen = s.turn.chosen_index
    # sweep a direction that only raises the chosen action's logit
    direction = np.zeros(NUM_FEATURES)
    feats = np.zeros_like(s.turn.features)
    feats[chosen, 0] = 1.0
    s = replace(s, turn=replace(s.turn, features=feats))
    direction[0] = 1.0
    values = [sample_loss(direction * x, ZERO, s) for x in np.linspace(-3, 3, 13)]
    diffs = np.diff(values)
    if label is D:
        assert np.all(diffs < 0)
    else:
        assert np.all(diffs > 0)


def _dataset(simple, vanilla, episodes=40):
    from marolab.rollout import collect_dataset
    return collect_dataset(simple, episodes, *vanilla)


def test_degeneracy_maro_gamma1_equals_makto(simple, vanilla):
    ds = _dataset(simple, vanilla)
    maro = train(ds, Faction.KILLER, TrainConfig(Method.MARO, epochs=5, gamma=1.0, balance=False))
    makto = train(ds, Faction.KILLER, TrainConfig(Method.MAKTO, epochs=5))
    assert maro[1].epoch_losses == makto[1].epoch_losses
    assert maro[0].theta == makto[0].theta


def test_makto_ignores_gamma_and_balance(simple, vanilla):
    ds = _dataset(simple, vanilla)
    a = train(ds, Faction.VILLAGER, TrainConfig(Method.MAKTO, epochs=3, gamma=0.5, balance=True))
    b = train(ds, Faction.VILLAGER, TrainConfig(Method.MAKTO, epochs=3, gamma=1.0, balance=False))
    assert a[0].theta == b[0].theta


def test_makto_differs_from_sft(simple, vanilla):
    ds = _dataset(simple, vanilla)
    makto = train(ds, Faction.KILLER, TrainConfig(Method.MAKTO, epochs=3))
    sft = train(ds, Faction.KILLER, TrainConfig(Method.SFT, epochs=3))
    assert makto[0].theta != sft[0].theta


def test_zero_lr_keeps_theta(simple, vanilla):
    ds = _dataset(simple, vanilla)
    pol, rep = train(ds, Faction.KILLER, TrainConfig(epochs=4, lr=0.0))
    assert pol.theta == (0.0,) * NUM_FEATURES
    assert len(set(rep.epoch_losses)) == 1


def test_train_deterministic(simple, vanilla):
    ds = _dataset(simple, vanilla)
    a = train(ds, Faction.KILLER, TrainConfig(epochs=3, seed=7))[1]
    b = train(ds, Faction.KILLER, TrainConfig(epochs=3, seed=7))[1]
    assert a.to_json() == b.to_json()
    assert len(a.epoch_losses) == 3 and all(math.isfinite(x) for x in a.epoch_losses)


def test_train_reports_balance(simple, vanilla):
    ds = _dataset(simple, vanilla)
    rep = train(ds, Faction.KILLER, TrainConfig(epochs=1))[1]
    assert set(rep.multipliers) == {"killer/desirable", "killer/undesirable",
                                    "villager/desirable", "villager/undesirable"}
    masses = [cell["mass"] for cell in rep.stats.values()]
    assert max(masses) - min(masses) <= 1e-9 * max(masses)
    assert len(rep.provenance["dataset_hash"]) == 64


def test_sft_no_positive_samples():
    s = _two_action_sample(U)
    ds = Dataset([s, replace(s, turn=replace(s.turn, faction=Faction.VILLAGER), label=D)])
    with pytest.raises(TrainingError, match="no positive samples"):
        train(ds, Faction.KILLER, TrainConfig(Method.SFT, epochs=1))


def test_maro_empty_cell_error():
    from marolab.balance import EmptyCellError
    s = _two_action_sample(D)
    ds = Dataset([s, replace(s, turn=replace(s.turn, faction=Faction.VILLAGER), label=U)])
    with pytest.raises(EmptyCellError, match="empty cell"):
        train(ds, Faction.KILLER, TrainConfig(epochs=1))


@pytest.mark.parametrize("method", [Method.SFT, Method.MAKTO])
def test_nonfinite_loss_aborts(method):
    feats = np.zeros((2, NUM_FEATURES))
    feats[0, 0] = np.nan
    s = _sample(feats, 0, D)
    ds = Dataset([s, replace(s, label=U),
                  replace(s, turn=replace(s.turn, faction=Faction.VILLAGER)),
                  replace(s, turn=replace(s.turn, faction=Faction.VILLAGER), label=U)])
    with pytest.raises(TrainingError, match="non-finite loss"):
        train(ds, Faction.KILLER, TrainConfig(method, epochs=1))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        LossConfig(beta=0)
