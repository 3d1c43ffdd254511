import numpy as np
import pytest
import torch

torch.set_num_threads(2)


@pytest.fixture(autouse=True)
def _fixed_torch_seed():
    torch.manual_seed(0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def zero_parameters(module):
    """Set every learnable parameter (weights and biases) to zero."""
    with torch.no_grad():
        for p in module.parameters():
            p.zero_()
    return module


def grad_check(module, inputs, n_samples=25, eps=1e-6, seed=0,
               params=None, loss_fn=None):
    """Central-difference check of autograd parameter gradients.

    Builds a fixed random projection of the (double precision) output as the
    scalar objective, samples coordinates across the chosen parameters, and
    returns the worst relative error.
    """
    module = module.double()
    inputs = [torch.as_tensor(x, dtype=torch.float64) for x in inputs]
    if loss_fn is None:
        gen = torch.Generator().manual_seed(seed)
        probe = {}

        def loss_fn():
            out = module(*inputs)
            if isinstance(out, tuple):
                out = out[0]
            if "v" not in probe:
                probe["v"] = torch.randn(out.shape, generator=gen, dtype=torch.float64)
            return (out * probe["v"]).sum()

    params = list(module.parameters()) if params is None else params
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    rng_local = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    per_param = max(1, n_samples // max(len(params), 1))
    for p, g in zip(params, grads):
        if g is None:
            continue
        flat = p.detach().reshape(-1)
        count = min(per_param, flat.numel())
        idx = rng_local.choice(flat.numel(), size=count, replace=False)
        for i in idx:
            with torch.no_grad():
                orig = flat[i].item()
                flat[i] = orig + eps
                hi = float(loss_fn())
                flat[i] = orig - eps
                lo = float(loss_fn())
                flat[i] = orig
            fd = (hi - lo) / (2 * eps)
            an = float(g.reshape(-1)[i])
            denom = max(abs(fd), abs(an), 1e-8)
            worst = max(worst, abs(fd - an) / denom)
            checked += 1
    assert checked > 0
    return worst


def grad_check_input(module, x, n_samples=20, eps=1e-6, seed=0):
    """Central-difference check of the gradient w.r.t. the input tensor."""
    module = module.double()
    x = torch.as_tensor(x, dtype=torch.float64).clone().requires_grad_(True)
    gen = torch.Generator().manual_seed(seed)
    probe = {}

    def loss_of(t):
        out = module(t)
        if isinstance(out, tuple):
            out = out[0]
        if "v" not in probe:
            probe["v"] = torch.randn(out.shape, generator=gen, dtype=torch.float64)
        return (out * probe["v"]).sum()

    loss = loss_of(x)
    (grad,) = torch.autograd.grad(loss, x)
    rng_local = np.random.default_rng(seed)
    idx = rng_local.choice(x.numel(), size=min(n_samples, x.numel()),
                           replace=False)
    worst = 0.0
    for i in idx:
        probe_x = x.detach().clone()
        probe_flat = probe_x.reshape(-1)
        with torch.no_grad():
            orig = probe_flat[i].item()
            probe_flat[i] = orig + eps
            hi = float(loss_of(probe_x))
            probe_flat[i] = orig - eps
            lo = float(loss_of(probe_x))
        fd = (hi - lo) / (2 * eps)
        an = float(grad.reshape(-1)[i])
        denom = max(abs(fd), abs(an), 1e-8)
        worst = max(worst, abs(fd - an) / denom)
    return worst
