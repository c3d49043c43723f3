import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtenn import autodiff as ad
from gtenn.autodiff import Matrix
from gtenn.errors import ValidationError
from gtenn.graph import DynamicNetwork, adjacency_array
from gtenn.model import GtennModel, ModelConfig
from gtenn.trainer import (
    TrainConfig,
    negative_distribution,
    positive_pairs,
    prepare,
    ranking_loss,
    sample_negative_batch,
    sample_negatives,
    snapshot_losses,
    train,
    write_train_log,
)


def six_node_network():
    s1 = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (2, 3)]
    s2 = [(0, 1), (1, 2), (3, 4), (4, 5), (3, 5), (1, 4)]
    return DynamicNetwork.from_edges(6, [s1, s2])


def end_to_end_error(ablation="full", dim=4, seed=0):
    """grad_check of the summed ranking loss w.r.t. every parameter, negatives held fixed."""
    net = six_node_network()
    model = GtennModel.init(net.n, ModelConfig(dim=dim, layers=2, ablation=ablation), np.random.default_rng(seed))
    data = prepare(net)
    cfg = TrainConfig(negatives=3, seed=seed)

    def loss():
        losses = snapshot_losses(model, data, [s.pairs for s in data], cfg, np.random.default_rng(99))
        return losses[0] + losses[1]

    return ad.grad_check(loss, model.parameters())


def test_positive_pairs_examples():
    net = DynamicNetwork.from_edges(3, [[], [(0, 1)], [(0, 1), (1, 2), (0, 2)]])
    assert positive_pairs(net, 1).shape == (0, 2)
    assert sorted(map(tuple, positive_pairs(net, 2).tolist())) == [(0, 1), (1, 0)]
    assert len(positive_pairs(net, 3)) == 6


def test_negative_distribution_examples():
    np.testing.assert_allclose(negative_distribution([3, 3, 3, 3]), 0.25)
    np.testing.assert_allclose(negative_distribution([16, 1]), [8 / 9, 1 / 9], rtol=1e-14)
    p = negative_distribution(np.arange(1, 40))
    assert abs(p.sum() - 1) <= 1e-12
    with pytest.raises(ValidationError):
        negative_distribution([0, 0])


def test_only_valid_negative_is_chosen():
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 0] = 1
    dist = negative_distribution([1, 1, 0.001])
    for seed in range(20):
        np.testing.assert_array_equal(sample_negatives((0, 1), dist, 1, a, seed=seed), [2])


def test_negatives_are_deterministic_per_seed():
    a = np.zeros((6, 6))
    a[0, 1] = a[1, 0] = 1
    dist = negative_distribution([1, 1, 2, 3, 4, 5])
    x = sample_negatives((0, 1), dist, 5, a, seed=7)
    np.testing.assert_array_equal(x, sample_negatives((0, 1), dist, 5, a, seed=7))


def test_negative_frequencies_follow_distribution():
    n = 6
    a = np.zeros((n, n))
    a[0, 1] = a[1, 0] = 1
    deg = np.array([1, 1, 2, 5, 9, 3])
    dist = negative_distribution(deg)
    pairs = np.tile([[0, 1]], (20_000, 1))
    negs, keep = sample_negative_batch(pairs, dist, 5, a, np.random.default_rng(0))
    assert keep.all()
    freq = np.bincount(negs.ravel(), minlength=n) / negs.size
    # anchor 0 and its neighbour 1 are excluded, so compare with the renormalised law
    expected = dist.copy()
    expected[[0, 1]] = 0
    expected /= expected.sum()
    np.testing.assert_allclose(freq, expected, atol=0.02 * expected.max())
    assert freq[0] == freq[1] == 0


def test_anchor_adjacent_to_everyone_is_skipped():
    a = 1 - np.eye(3)
    negs, keep = sample_negative_batch(np.array([[0, 1]]), negative_distribution([2, 2, 2]), 2, a, np.random.default_rng(0))
    assert not keep[0]


def test_hinge_examples():
    h = Matrix([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    loss = ranking_loss(h, np.array([[0, 1]]), np.array([[2]]), margin=1.0)
    assert loss.item() == pytest.approx(1.0)
    h2 = Matrix([[0.0, 0.0], [0.0, 0.0], [0.0, 2.0]])
    assert ranking_loss(h2, np.array([[0, 1]]), np.array([[2]]), margin=1.0).item() == 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 5.0), st.floats(0.1, 10.0))
def test_hinge_nonnegative_and_homogeneous(seed, margin, c):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(5, 3))
    pairs = np.array([[0, 1], [2, 3], [4, 0]])
    negs = rng.integers(0, 5, size=(3, 2))
    base = ranking_loss(Matrix(h), pairs, negs, margin).item()
    # scaling coordinates by sqrt(c) scales squared distances by c
    scaled = ranking_loss(Matrix(h * np.sqrt(c)), pairs, negs, margin * c).item()
    assert base >= 0
    assert scaled == pytest.approx(c * base, rel=1e-9, abs=1e-12)
    x, y = pairs[:, 0], pairs[:, 1]
    pos = ((h[x] - h[y]) ** 2).sum(-1)[:, None]
    neg = ((h[x][:, None, :] - h[negs]) ** 2).sum(-1)
    active = margin + pos - neg > 0
    active_scaled = margin * c + c * pos - c * neg > 0
    np.testing.assert_array_equal(active, active_scaled)


@pytest.mark.parametrize("ablation", ["full", "gcn_gru", "gcn_only", "gru_only"])
def test_end_to_end_gradients(ablation):
    assert end_to_end_error(ablation) <= 1e-3


def test_zero_learning_rate_changes_nothing(two_cliques):
    model = GtennModel.init(4, ModelConfig(dim=4), np.random.default_rng(0))
    before = [p.numpy() for p in model.parameters()]
    for kind in ("adam", "sgd"):
        train(two_cliques, config=TrainConfig(epochs=5, lr=0.0, optimizer=kind), model=model)
    for p, b in zip(model.parameters(), before):
        np.testing.assert_array_equal(p.value, b)


def test_two_cliques_separate(two_cliques):
    res = train(two_cliques, ModelConfig(dim=8), TrainConfig(epochs=200, lr=0.01, seed=0))
    for h in res.embeddings:
        d = ((h[:, None] - h[None]) ** 2).sum(-1)
        intra = max(d[0, 1], d[2, 3])
        inter = min(d[0, 2], d[0, 3], d[1, 2], d[1, 3])
        assert intra < inter


def test_sgd_loss_mostly_decreases(two_cliques):
    res = train(two_cliques, ModelConfig(dim=8), TrainConfig(epochs=50, lr=1e-3, optimizer="sgd", seed=3))
    totals = [total for _, total, _ in res.history]
    ups = sum(b > a for a, b in zip(totals, totals[1:]))
    assert ups <= 5


def test_training_is_deterministic(two_cliques):
    cfg = TrainConfig(epochs=15, seed=4)
    a = train(two_cliques, ModelConfig(dim=6), cfg)
    b = train(two_cliques, ModelConfig(dim=6), cfg)
    assert a.final_loss == b.final_loss
    for x, y in zip(a.embeddings, b.embeddings):
        np.testing.assert_array_equal(x, y)


def test_minibatch_training_runs(two_cliques):
    res = train(two_cliques, ModelConfig(dim=4), TrainConfig(epochs=3, batch_size=1))
    assert len(res.history) == 3 and np.isfinite(res.final_loss)


def test_ablation_parameter_sets():
    rng = np.random.default_rng(0)
    sizes = {}
    for mode in ("full", "gcn_gru", "gcn_only", "gru_only"):
        model = GtennModel.init(5, ModelConfig(dim=3, ablation=mode), rng)
        sizes[mode] = sum(p.value.size for p in model.parameters())
    assert sizes["full"] > sizes["gcn_gru"] > sizes["gcn_only"]
    assert sizes["gru_only"] < sizes["gcn_gru"]
    gcn_only = GtennModel.init(5, ModelConfig(dim=3, ablation="gcn_only"), rng)
    assert gcn_only.grus is None and gcn_only.temporal is None


def test_invalid_configs():
    with pytest.raises(ValidationError):
        TrainConfig(margin=0).validate()
    with pytest.raises(ValidationError):
        TrainConfig(optimizer="rmsprop").validate()
    with pytest.raises(ValidationError):
        ModelConfig(ablation="nope").validate()


def test_train_log(tmp_path, two_cliques):
    res = train(two_cliques, ModelConfig(dim=4), TrainConfig(epochs=3))
    write_train_log(tmp_path / "log.csv", res.history, 2)
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == "epoch,total_loss,loss_t1,loss_t2"
    assert len(lines) == 4 and lines[3].startswith("3,")
