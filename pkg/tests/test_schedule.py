"""
Tests for the warm-up/decay learning-rate schedule and optimizer groups.
"""

import pytest
import torch
from torch import nn

from pcode_config.errors import ConfigError
from pcode_train.optim import build_optimizer
from pcode_train.schedule import build_scheduler, lr_at


class TestLrAt:
    """Test cases for the closed-form schedule."""

    def test_endpoints(self):
        assert lr_at(0, 100, 2000, 3e-5) == 0.0
        assert lr_at(100, 100, 2000, 3e-5) == pytest.approx(3e-5)
        assert lr_at(2000, 100, 2000, 3e-5) == 0.0

    def test_midpoint_of_decay(self):
        assert lr_at(1050, 100, 2000, 3e-5) == pytest.approx(1.5e-5)

    def test_warmup_is_linear(self):
        assert lr_at(25, 100, 2000, 3e-5) == pytest.approx(0.75e-5)

    def test_past_the_end(self):
        assert lr_at(5000, 100, 2000, 3e-5) == 0.0

    def test_no_warmup(self):
        assert lr_at(0, 0, 10, 1.0) == 1.0

    def test_invalid_arguments(self):
        with pytest.raises(ConfigError):
            lr_at(-1, 10, 100, 1.0)
        with pytest.raises(ConfigError):
            lr_at(0, 200, 100, 1.0)


class TestScheduler:
    def test_scheduler_follows_lr_at(self):
        param = nn.Parameter(torch.zeros(2))
        optimizer = torch.optim.AdamW([param], lr=3e-5)
        scheduler = build_scheduler(optimizer, 10, 100)
        seen = []
        for _ in range(100):
            seen.append(optimizer.param_groups[0]["lr"])
            optimizer.step()
            scheduler.step()
        for step in (0, 5, 10, 55, 99):
            assert seen[step] == pytest.approx(lr_at(step, 10, 100, 3e-5))


class TestOptimizer:
    def test_decay_groups(self):
        model = nn.Sequential(nn.Linear(4, 4), nn.LayerNorm(4))
        optimizer = build_optimizer(model.named_parameters(), 1e-3, 0.01)
        decay, no_decay = optimizer.param_groups
        assert decay["weight_decay"] == 0.01
        assert len(decay["params"]) == 1
        assert no_decay["weight_decay"] == 0.0
        assert len(no_decay["params"]) == 3

    def test_frozen_parameters_skipped(self):
        layer = nn.Linear(4, 4)
        for param in layer.parameters():
            param.requires_grad_(False)
        with pytest.raises(ConfigError):
            build_optimizer(layer.named_parameters(), 1e-3)
