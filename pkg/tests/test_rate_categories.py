import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from models.rate import Granularity
from services.errors import InvalidInput, InvalidRate
from services.rate import (
    build_category_set,
    category_to_rate,
    gce_logit_gradient,
    gce_loss,
    gce_loss_from_logits,
    rate_to_category,
    soft_label_matrix,
    soft_labels,
)


def test_grid_sizes():
    phoneme = build_category_set(Granularity.PHONEME)
    assert phoneme.n_classes == 72
    assert phoneme.centers[0] == 0.25 and phoneme.centers[71] == 18.0
    word = build_category_set(Granularity.WORD)
    assert word.n_classes == 32 and word.centers[31] == 8.0
    assert build_category_set(Granularity.SYLLABLE).n_classes == 32


def test_grid_is_uniform():
    for g in Granularity:
        categories = build_category_set(g)
        np.testing.assert_allclose(np.diff(categories.centers), 0.25)
        assert all(category_to_rate(k, categories) == categories.centers[k] for k in range(categories.n_classes))


def test_rate_to_category_examples():
    syllable = build_category_set(Granularity.SYLLABLE)
    assert syllable.centers[rate_to_category(3.1, syllable)] == 3.0
    assert rate_to_category(3.125, syllable) == 11
    assert rate_to_category(25.0, build_category_set(Granularity.PHONEME)) == 71
    assert rate_to_category(0.01, syllable) == 0


@pytest.mark.parametrize("rate", [0.0, -1.0, float("nan"), float("inf")])
def test_invalid_rate(rate):
    with pytest.raises(InvalidRate):
        rate_to_category(rate, build_category_set(Granularity.WORD))


def test_rate_to_category_matches_brute_force():
    categories = build_category_set(Granularity.PHONEME)
    rng = np.random.default_rng(0)
    for rate in rng.uniform(0.001, 20.0, 10_000):
        expected = min(range(categories.n_classes), key=lambda k: (abs(rate - categories.centers[k]), k))
        assert rate_to_category(float(rate), categories) == expected


def test_soft_labels_values():
    labels = soft_labels(5, 32, sigma=1.0)
    assert labels[5] == 1.0
    assert abs(labels[4] - math.exp(-0.5)) < 1e-9
    assert abs(labels[7] - math.exp(-2.0)) < 1e-9
    assert labels.argmax() == 5
    assert abs(soft_labels(5, 32, 1.0, normalize=True).sum() - 1.0) < 1e-9
    with pytest.raises(InvalidInput):
        soft_labels(32, 32, 1.0)


@pytest.mark.parametrize("granularity", list(Granularity))
@pytest.mark.parametrize("sigma, normalize", [(0.5, False), (1.0, False), (3.0, True)])
def test_soft_labels_peak_at_their_class(granularity, sigma, normalize):
    n_classes = build_category_set(granularity).n_classes
    for c in range(n_classes):
        assert int(np.argmax(soft_labels(c, n_classes, sigma, normalize))) == c


@pytest.mark.parametrize("granularity", list(Granularity))
def test_every_center_maps_back_to_its_class(granularity):
    categories = build_category_set(granularity)
    for index in range(categories.n_classes):
        assert rate_to_category(category_to_rate(index, categories), categories) == index


def test_soft_label_matrix_matches_vector():
    targets = torch.tensor([0, 7, 31])
    matrix = soft_label_matrix(targets, 32, 2.0, dtype=torch.float64).numpy()
    for row, c in zip(matrix, targets.tolist()):
        np.testing.assert_allclose(row, soft_labels(c, 32, 2.0), rtol=1e-12)


def test_gce_uniform_prediction():
    n = 32
    probs = torch.full((3, n), 1.0 / n, dtype=torch.float64)
    targets = torch.tensor([0, 10, 31])
    expected = np.mean([math.log(n) * soft_labels(c, n, 1.0).sum() for c in targets.tolist()])
    assert abs(gce_loss(probs, targets, 1.0).item() - expected) < 1e-9


def test_gce_matches_brute_force():
    rng = np.random.default_rng(3)
    probs = rng.dirichlet(np.ones(8), size=4)
    targets = [1, 3, 0, 7]
    total = 0.0
    for b in range(4):
        for c in range(8):
            total -= math.exp(-((c - targets[b]) ** 2) / 2.0) * math.log(probs[b, c])
    loss = gce_loss(torch.from_numpy(probs), torch.tensor(targets), 1.0)
    assert abs(loss.item() - total / 4) < 1e-9


def test_gce_one_hot_prediction_uses_eps_clamp():
    probs = torch.zeros((1, 8), dtype=torch.float64)
    probs[0, 2] = 1.0
    eps = 1e-12
    labels = soft_labels(2, 8, 1.0)
    expected = -sum(labels[c] * math.log(eps) for c in range(8) if c != 2)
    assert abs(gce_loss(probs, torch.tensor([2]), 1.0, eps=eps).item() - expected) < 1e-9


def test_small_sigma_recovers_cross_entropy():
    logits = torch.randn(5, 32, dtype=torch.float64, generator=torch.Generator().manual_seed(0))
    targets = torch.tensor([0, 4, 9, 20, 31])
    plain = F.cross_entropy(logits, targets)
    assert abs(gce_loss_from_logits(logits, targets, 1e-4).item() - plain.item()) < 1e-9
    assert abs(gce_loss(torch.softmax(logits, 1), targets, 1e-4).item() - plain.item()) < 1e-9


def test_gce_gradient_closed_form():
    logits = torch.randn(4, 16, dtype=torch.float64, generator=torch.Generator().manual_seed(1))
    logits.requires_grad_(True)
    targets = torch.tensor([0, 5, 8, 15])
    gce_loss_from_logits(logits, targets, 1.5).backward()
    expected = gce_logit_gradient(logits.detach(), targets, 1.5)
    torch.testing.assert_close(logits.grad, expected, rtol=1e-10, atol=1e-12)


def test_gce_gradient_finite_difference():
    logits = torch.randn(2, 8, dtype=torch.float64, generator=torch.Generator().manual_seed(2))
    logits.requires_grad_(True)
    targets = torch.tensor([3, 6])
    assert torch.autograd.gradcheck(lambda z: gce_loss_from_logits(z, targets, 1.0), (logits,))


def _central_difference(loss, logits, h=1e-6):
    grad = torch.zeros_like(logits)
    flat, out = logits.view(-1), grad.view(-1)
    for i in range(flat.numel()):
        saved = flat[i].item()
        flat[i] = saved + h
        upper = loss(logits).item()
        flat[i] = saved - h
        lower = loss(logits).item()
        flat[i] = saved
        out[i] = (upper - lower) / (2 * h)
    return grad


@pytest.mark.parametrize("normalize", [False, True])
def test_gce_gradient_matches_central_differences(normalize):
    generator = torch.Generator().manual_seed(7)
    for _ in range(100):
        logits = 3.0 * torch.randn(8, 32, dtype=torch.float64, generator=generator)
        targets = torch.randint(0, 32, (8,), generator=generator)
        sigma = 0.5 + 2.5 * torch.rand(1, dtype=torch.float64, generator=generator).item()
        numeric = _central_difference(lambda z: gce_loss_from_logits(z, targets, sigma, normalize), logits.clone())
        closed = gce_logit_gradient(logits, targets, sigma, normalize)
        relative = torch.linalg.norm(numeric - closed) / torch.linalg.norm(closed)
        assert relative.item() < 1e-4


def test_gce_rejects_empty_batch():
    with pytest.raises(InvalidInput):
        gce_loss(torch.zeros((0, 8)), torch.zeros(0, dtype=torch.long), 1.0)
