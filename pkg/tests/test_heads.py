import numpy as np
import torch

import refops
from discrepnet.heads import ReconstructionHeads
from test_decoder import numpy_params, reference_afs
from test_graph_head import reference_sam

from conftest import zero_parameters


def test_output_shapes_match_input_size():
    heads = ReconstructionHeads(8, 4)
    decoded = torch.rand(2, 8, 16, 16)
    skip = torch.rand(2, 4, 32, 32)
    pair = heads(decoded, skip, (64, 64))
    assert tuple(pair.rec1.shape) == (2, 3, 64, 64)
    assert tuple(pair.rec2.shape) == (2, 3, 64, 64)


def test_outputs_clamped_to_unit_range():
    heads = ReconstructionHeads(8, 4)
    pair = heads(torch.rand(1, 8, 8, 8) * 50, torch.rand(1, 4, 16, 16) * 50, (32, 32))
    for rec in (pair.rec1, pair.rec2):
        assert float(rec.min()) >= 0.0 and float(rec.max()) <= 1.0


def test_zero_features_zero_params_give_zero_images():
    heads = zero_parameters(ReconstructionHeads(4, 4))
    pair = heads(torch.zeros(1, 4, 8, 8), torch.zeros(1, 4, 16, 16), (32, 32))
    assert torch.equal(pair.rec1, torch.zeros_like(pair.rec1))
    assert torch.equal(pair.rec2, torch.zeros_like(pair.rec2))


def test_both_heads_read_identical_inputs():
    heads = ReconstructionHeads(4, 4)
    seen = []
    heads.fusion_head.register_forward_pre_hook(lambda m, args: seen.append(args))
    heads.graph_head.register_forward_pre_hook(lambda m, args: seen.append(args))
    decoded = torch.rand(1, 4, 8, 8)
    skip = torch.rand(1, 4, 16, 16)
    heads(decoded, skip, (32, 32))
    assert len(seen) == 2
    assert seen[0][0] is decoded and seen[1][0] is decoded
    assert seen[0][1] is skip and seen[1][1] is skip


def test_heads_diverge_after_one_training_step():
    torch.manual_seed(21)
    heads = ReconstructionHeads(4, 4)
    opt = torch.optim.Adam(heads.parameters(), lr=1e-3)
    decoded = torch.rand(2, 4, 8, 8)
    skip = torch.rand(2, 4, 16, 16)
    target = torch.rand(2, 3, 32, 32)
    pair = heads(decoded, skip, (32, 32))
    loss = (pair.rec1 - target).square().mean() + (pair.rec2 - target).square().mean()
    opt.zero_grad()
    loss.backward()
    opt.step()
    with torch.no_grad():
        pair = heads(decoded, skip, (32, 32))
    assert float((pair.rec1 - pair.rec2).abs().mean()) > 0.0


def test_heads_match_composed_submodule_oracles():
    torch.manual_seed(17)
    heads = ReconstructionHeads(5, 3, pool_nodes=(2, 2)).double()
    decoded = torch.randn(1, 5, 4, 4, dtype=torch.float64)
    skip = torch.randn(1, 3, 8, 8, dtype=torch.float64)
    pair = heads(decoded, skip, (16, 16))

    afs_np = reference_afs(decoded.numpy(), skip.numpy(),
                           numpy_params(heads.fusion_head))
    rgb1 = refops.conv2d(afs_np, heads.rgb1.weight.detach().numpy(),
                         heads.rgb1.bias.detach().numpy())
    exp1 = np.clip(refops.bilinear_resize(rgb1, (16, 16)), 0.0, 1.0)
    np.testing.assert_allclose(pair.rec1.detach().numpy(), exp1, atol=1e-12, rtol=0)

    sam_np = reference_sam(decoded.numpy(), skip.numpy(),
                           numpy_params(heads.graph_head))
    rgb2 = refops.conv2d(sam_np, heads.rgb2.weight.detach().numpy(),
                         heads.rgb2.bias.detach().numpy())
    exp2 = np.clip(refops.bilinear_resize(rgb2, (16, 16)), 0.0, 1.0)
    np.testing.assert_allclose(pair.rec2.detach().numpy(), exp2, atol=1e-12, rtol=0)
