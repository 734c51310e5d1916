import math

import numpy as np
import pytest
import torch
from scipy import stats

from services.errors import DivergedError, InvalidCoefficient, InvalidMask, ShapeError
from services.flow import (
    FunctionVelocityModel,
    LatentPair,
    cfg_combine,
    cfm_loss,
    euler_solve,
    ot_interpolate,
    sample_flow_step,
    sway,
    time_grid,
    velocity_target,
)


@pytest.fixture
def pair():
    gen = torch.Generator().manual_seed(0)
    return LatentPair(torch.randn(2, 10, 4, generator=gen), torch.randn(2, 10, 4, generator=gen))


def test_interpolation_endpoints(pair):
    assert torch.equal(ot_interpolate(pair, 0.0), pair.x0)
    assert torch.equal(ot_interpolate(pair, 1.0), pair.x1)
    torch.testing.assert_close(ot_interpolate(pair, 0.5), (pair.x0 + pair.x1) / 2)


def test_per_item_times(pair):
    t = torch.tensor([0.0, 1.0])
    out = ot_interpolate(pair, t)
    assert torch.equal(out[0], pair.x0[0])
    assert torch.equal(out[1], pair.x1[1])


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        LatentPair(torch.zeros(3), torch.zeros(4))


def test_velocity_target(pair):
    assert torch.equal(velocity_target(LatentPair(pair.x0, pair.x0)), torch.zeros_like(pair.x0))
    torch.testing.assert_close(velocity_target(pair), pair.x1 - pair.x0)


@pytest.mark.parametrize("t", [0.1, 0.5, 0.9])
def test_path_derivative_is_the_velocity_target(t):
    gen = torch.Generator().manual_seed(3)
    pair = LatentPair(torch.randn(2, 6, 4, dtype=torch.float64, generator=gen), torch.randn(2, 6, 4, dtype=torch.float64, generator=gen))
    h = 1e-5
    numeric = (ot_interpolate(pair, t + h) - ot_interpolate(pair, t - h)) / (2 * h)
    torch.testing.assert_close(numeric, velocity_target(pair), rtol=1e-6, atol=1e-8)


def test_cfm_loss_closed_forms(pair):
    oracle = FunctionVelocityModel(lambda x, t, c: pair.x1 - pair.x0)
    assert cfm_loss(oracle, pair, 0.3).item() == 0.0
    zero = FunctionVelocityModel(lambda x, t, c: torch.zeros_like(x))
    expected = float(((pair.x1 - pair.x0) ** 2).mean())
    assert cfm_loss(zero, pair, 0.3).item() == pytest.approx(expected, rel=1e-6)


def test_cfm_loss_masked_half(pair):
    zero = FunctionVelocityModel(lambda x, t, c: torch.zeros_like(x))
    mask = torch.zeros(2, 10, dtype=torch.bool)
    mask[:, 5:] = True
    diff = (pair.x1 - pair.x0).numpy()
    expected = float(np.mean(diff[:, 5:] ** 2))
    assert cfm_loss(zero, pair, 0.7, mask=mask).item() == pytest.approx(expected, rel=1e-6)
    with pytest.raises(InvalidMask):
        cfm_loss(zero, pair, 0.7, mask=torch.zeros(2, 10, dtype=torch.bool))


def test_flow_steps_are_uniform():
    draws = sample_flow_step(np.random.default_rng(0), 5000)
    assert stats.kstest(draws, "uniform").pvalue > 0.001
    again = sample_flow_step(np.random.default_rng(0), 5000)
    np.testing.assert_array_equal(draws, again)
    assert 0.0 <= sample_flow_step(np.random.default_rng(1)) < 1.0


def test_sway_endpoints_and_identity():
    grid = np.linspace(0.0, 1.0, 101)
    for s in (-1.0, -0.5, 0.0):
        assert sway(0.0, s) == 0.0
        assert sway(1.0, s) == 1.0
        assert np.all(np.diff(sway(grid, s)) > 0)
    np.testing.assert_array_equal(sway(grid, 0.0), grid)


def test_sway_formula():
    t, s = 0.3, -1.0
    assert sway(t, s) == pytest.approx(t + s * (math.cos(math.pi * t / 2) - 1 + t), abs=1e-12)
    assert sway(0.5, -1.0) < 0.5


def test_sway_rejects_large_coefficient():
    with pytest.raises(InvalidCoefficient):
        sway(0.5, 1.5)
    with pytest.raises(InvalidCoefficient):
        time_grid(4, -2.0)


def test_cfg_combine():
    cond, uncond = torch.tensor([1.0, 2.0]), torch.tensor([0.5, -1.0])
    assert torch.equal(cfg_combine(cond, uncond, 1.0), cond)
    assert torch.equal(cfg_combine(cond, uncond, 0.0), uncond)
    torch.testing.assert_close(cfg_combine(cond, torch.zeros(2), 2.0), 2 * cond)
    with pytest.raises(ShapeError):
        cfg_combine(cond, torch.zeros(3), 2.0)


@pytest.mark.parametrize("nfe", [1, 4, 8, 32])
def test_euler_constant_field(nfe):
    c = torch.tensor([0.5, -2.0, 3.0], dtype=torch.float64)
    x0 = torch.tensor([1.0, 1.0, 1.0], dtype=torch.float64)
    model = FunctionVelocityModel(lambda x, t, cond: c.expand_as(x))
    torch.testing.assert_close(euler_solve(model, x0, nfe), x0 + c, rtol=0, atol=1e-12)
    torch.testing.assert_close(euler_solve(model, x0, nfe, sway_coeff=-1.0), x0 + c, rtol=0, atol=1e-12)


def test_euler_first_order_convergence():
    a, b = 0.7, 1.3
    model = FunctionVelocityModel(lambda x, t, cond: torch.full_like(x, a + b * t))
    x0 = torch.zeros(1, dtype=torch.float64)
    exact = a + b / 2
    errors = [abs(float(euler_solve(model, x0, nfe)[0]) - exact) for nfe in (8, 16, 32)]
    for coarse, fine in zip(errors, errors[1:]):
        assert 1.8 <= coarse / fine <= 2.2


def test_euler_guidance_uses_null_condition():
    seen = []

    def field(x, t, cond):
        seen.append(cond)
        return torch.ones_like(x) * (1.0 if cond == "text" else 0.0)

    model = FunctionVelocityModel(field, null_fn=lambda cond: "no-text")
    out = euler_solve(model, torch.zeros(2), 2, cond="text", cfg_strength=2.0)
    torch.testing.assert_close(out, torch.full((2,), 2.0))
    assert seen.count("no-text") == 2

    seen.clear()
    euler_solve(model, torch.zeros(2), 2, cond="text", cfg_strength=1.0)
    assert "no-text" not in seen


def test_euler_reports_divergence():
    model = FunctionVelocityModel(lambda x, t, cond: torch.full_like(x, float("inf")))
    with pytest.raises(DivergedError) as excinfo:
        euler_solve(model, torch.zeros(2), 3)
    assert excinfo.value.step == 1
