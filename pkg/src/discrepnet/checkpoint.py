"""Checkpoint container: a .npz archive holding every named parameter/buffer,
a JSON shape manifest, and an echo of the training configuration."""

import json
from pathlib import Path

import numpy as np
import torch

from .config import TrainConfig
from .errors import CheckpointMismatchError
from .model import AblationSpec, ForgeryDetector


def save_checkpoint(path, model: ForgeryDetector, config: TrainConfig, extra=None):
    state = model.state_dict()
    manifest = {name: {"shape": list(tensor.shape), "dtype": str(tensor.dtype)}
                for name, tensor in state.items()}
    meta = {"config": config.to_dict(), "manifest": manifest,
            "extra": extra or {}}
    arrays = {f"param/{name}": tensor.detach().cpu().numpy()
              for name, tensor in state.items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **arrays)
    return path


def read_meta(path):
    with np.load(path) as archive:
        if "__meta__" not in archive:
            raise CheckpointMismatchError(f"{path} is not a model checkpoint")
        return json.loads(archive["__meta__"].tobytes().decode())


def load_checkpoint(path):
    """Rebuild the model from the config echo and restore its parameters.

    Raises CheckpointMismatchError when the stored shape manifest does not
    match the rebuilt model.
    """
    path = Path(path)
    meta = read_meta(path)
    config = TrainConfig.from_dict(meta["config"])
    model = ForgeryDetector(config.backbone, AblationSpec.from_name(config.ablation))
    state = model.state_dict()
    manifest = meta["manifest"]
    missing = sorted(set(state) - set(manifest))
    unexpected = sorted(set(manifest) - set(state))
    mismatched = [name for name in state if name in manifest
                  and list(state[name].shape) != manifest[name]["shape"]]
    if missing or unexpected or mismatched:
        raise CheckpointMismatchError(
            f"manifest mismatch for {path}: missing={missing} "
            f"unexpected={unexpected} shape-mismatch={mismatched}")
    with np.load(path) as archive:
        for name in state:
            state[name] = torch.as_tensor(np.array(archive[f"param/{name}"]))
    model.load_state_dict(state)
    model.eval()
    return model, config, meta.get("extra", {})
