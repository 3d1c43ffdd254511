import numpy as np
import pytest
import torch

from discrepnet.encoder import (BackboneConfig, Encoder, FeaturePyramid,
                                load_backbone_weights)
from discrepnet.errors import ConfigurationError

from conftest import grad_check_input, zero_parameters


def test_tiny_stage_sizes_64():
    cfg = BackboneConfig.tiny()
    assert cfg.stage_sizes() == [(32, 32), (16, 16), (8, 8), (4, 4), (4, 4)]


def test_tiny_forward_shapes():
    cfg = BackboneConfig.tiny()
    pyramid = Encoder(cfg)(torch.rand(2, 3, 64, 64))
    shapes = [tuple(f.shape) for f in pyramid.levels]
    assert shapes == [(2, 16, 32, 32), (2, 32, 16, 16), (2, 64, 8, 8),
                      (2, 128, 4, 4), (2, 256, 4, 4)]


def test_xception_like_golden_shapes_299():
    # golden trace of the stride schedule (2,2,2,2,1) from a 299x299 input
    cfg = BackboneConfig.xception_like()
    assert cfg.stage_sizes() == [(150, 150), (75, 75), (38, 38), (19, 19), (19, 19)]
    encoder = Encoder(cfg).eval()
    with torch.no_grad():
        pyramid = encoder(torch.rand(1, 3, 299, 299))
    assert tuple(pyramid.levels[4].shape) == (1, 728, 19, 19)
    assert [f.shape[1] for f in pyramid.levels] == [64, 128, 256, 728, 728]


@pytest.mark.parametrize("preset,size", [("tiny", (64, 64)), ("tiny", (32, 48)),
                                         ("xception_like", (64, 64))])
def test_shape_contract_grid(preset, size):
    cfg = (BackboneConfig.tiny(size) if preset == "tiny"
           else BackboneConfig.xception_like(size))
    encoder = Encoder(cfg).eval()
    with torch.no_grad():
        pyramid = encoder(torch.rand(1, 3, *size))
    for f, (h, w), c in zip(pyramid.levels, cfg.stage_sizes(), cfg.stage_channels):
        assert tuple(f.shape) == (1, c, h, w)
    spatial = [f.shape[-2:] for f in pyramid.levels]
    assert all(a >= b for a, b in zip(spatial, spatial[1:]))


def test_encode_is_pure():
    encoder = Encoder(BackboneConfig.tiny()).eval()
    x = torch.rand(2, 3, 64, 64)
    with torch.no_grad():
        a = encoder(x)
        b = encoder(x)
    for fa, fb in zip(a.levels, b.levels):
        assert torch.equal(fa, fb)


def test_zero_input_zero_params_gives_zero_taps():
    encoder = zero_parameters(Encoder(BackboneConfig.tiny())).eval()
    with torch.no_grad():
        pyramid = encoder(torch.zeros(2, 3, 64, 64))
    for f in pyramid.levels:
        assert torch.equal(f, torch.zeros_like(f))


def test_input_size_mismatch_names_dims():
    encoder = Encoder(BackboneConfig.tiny())
    with pytest.raises(ConfigurationError, match=r"\(32, 32\).*\(64, 64\)"):
        encoder(torch.rand(1, 3, 32, 32))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        BackboneConfig(stage_channels=(8, 8, 8)).validate()
    with pytest.raises(ConfigurationError):
        BackboneConfig(stage_strides=(2, 2, 2, 2, 0)).validate()
    with pytest.raises(ConfigurationError):
        BackboneConfig(preset="resnet").validate()
    with pytest.raises(ConfigurationError):
        BackboneConfig(input_size=(8,)).validate()
    # ceil-mode stage arithmetic keeps aggressive schedules legal at 1x1
    cfg = BackboneConfig(input_size=(8, 8), stage_strides=(4, 4, 4, 4, 4))
    cfg.validate()
    assert cfg.stage_sizes()[-1] == (1, 1)


def test_pyramid_invariants():
    with pytest.raises(ConfigurationError):
        FeaturePyramid(tuple(torch.zeros(1, 1, 4, 4) for _ in range(3)))
    levels = tuple(torch.zeros(1, 1, s, s) for s in (16, 8, 4, 2, 2))
    with pytest.raises(ConfigurationError):
        FeaturePyramid(levels, disc=(torch.zeros(1, 1, 3, 3),) * 4)


def test_two_stage_truncation_gradient_check():
    cfg = BackboneConfig("tiny", (4, 6, 8, 8, 8), (16, 16), (2, 2, 2, 2, 1))
    encoder = Encoder(cfg).eval()
    truncated = torch.nn.Sequential(encoder.stages[0], encoder.stages[1])
    x = torch.rand(2, 3, 16, 16, dtype=torch.float64)
    worst = grad_check_input(truncated, x, n_samples=24)
    assert worst < 1e-4


def test_weight_hook_roundtrip(tmp_path):
    encoder = Encoder(BackboneConfig.tiny())
    state = {k: v.numpy() for k, v in encoder.state_dict().items()}
    np.savez(tmp_path / "weights.npz", **state)
    other = Encoder(BackboneConfig.tiny())
    loaded = load_backbone_weights(other, tmp_path / "weights.npz")
    assert set(loaded) == set(state)
    for k, v in other.state_dict().items():
        assert np.array_equal(v.numpy(), state[k])


def test_weight_hook_missing_file_is_noop(tmp_path):
    encoder = Encoder(BackboneConfig.tiny())
    assert load_backbone_weights(encoder, tmp_path / "absent.npz") == []
