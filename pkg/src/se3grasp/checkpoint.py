"""
Binary checkpoint format: a versioned little-endian header (magic, mode,
layer sizes, dimensions, schedule) followed by every parameter tensor as
IEEE-754 doubles in declared order. A JSON sidecar records the run.
"""
import json
import logging
import struct
from dataclasses import dataclass
from typing import Tuple
import numpy as np
from .errors import CheckpointError, ConfigError
from .net import MODES, Denoiser, NetConfig, param_shapes
from .schedule import NoiseSchedule
log = logging.getLogger(__name__)
MAGIC = b"SE3G"
VERSION = 1
_DIMS = ("time_embed_dim", "feature_dim", "codebook_dim", "num_classes", "num_regions", "head_hidden")
@dataclass
class Checkpoint:
    model: Denoiser
    schedule: NoiseSchedule
    mode: str
class _Reader:  # pylint: disable=too-few-public-methods
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
    def take(self, fmt: str) -> Tuple:
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise CheckpointError("checkpoint is truncated")
        values = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return values
def encode_checkpoint(model: Denoiser, schedule: NoiseSchedule, mode: str) -> bytes:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    cfg = model.config
    parts = [
        struct.pack("<4sIB", MAGIC, VERSION, MODES.index(mode)),
        struct.pack(f"<I{len(cfg.hidden)}I", len(cfg.hidden), *cfg.hidden),
        struct.pack("<6I", *(getattr(cfg, name) for name in _DIMS)),
        struct.pack("<3d", schedule.alpha_p, schedule.alpha_q, schedule.alpha_t),
    ]
    for name, shape in param_shapes(cfg).items():
        tensor = np.ascontiguousarray(model.params[name], dtype="<f8")
        if tensor.shape != shape:
            raise CheckpointError(f"parameter {name} has shape {tensor.shape}, expected {shape}")
        parts.append(tensor.tobytes())
    return b"".join(parts)
def decode_checkpoint(data: bytes) -> Checkpoint:
    """
    Rebuilds model, schedule and mode from checkpoint bytes.
    Raises:
        CheckpointError: On bad magic, unsupported version, truncation or trailing bytes.
    """
    reader = _Reader(data)
    magic, version, mode_index = reader.take("<4sIB")
    if magic != MAGIC:
        raise CheckpointError("not a se3grasp checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if mode_index >= len(MODES):
        raise CheckpointError(f"unknown mode index {mode_index}")
    (layers,) = reader.take("<I")
    hidden = reader.take(f"<{layers}I")
    dims = dict(zip(_DIMS, reader.take("<6I")))
    try:
        cfg = NetConfig(hidden=hidden, **dims)
        schedule = NoiseSchedule(*reader.take("<3d"))
    except (ConfigError, ValueError) as e:
        raise CheckpointError(f"invalid checkpoint header: {e}") from e
    params = {}
    for name, shape in param_shapes(cfg).items():
        count = int(np.prod(shape))
        values = reader.take(f"<{count}d")
        params[name] = np.array(values, dtype=float).reshape(shape)
    if reader.pos != len(data):
        raise CheckpointError(f"{len(data) - reader.pos} trailing bytes after the last tensor")
    return Checkpoint(Denoiser(cfg, params), schedule, MODES[mode_index])
def checkpoint_sidecar(ckpt: Checkpoint, seed: int, config_hash: str, train_config: dict) -> str:
    """JSON description of a checkpoint and the run that produced it."""
    payload = {
        "format_version": VERSION,
        "mode": ckpt.mode,
        "seed": seed,
        "config_hash": config_hash,
        "net": {"hidden": list(ckpt.model.config.hidden), **{k: getattr(ckpt.model.config, k) for k in _DIMS}},
        "schedule": {"alpha_p": ckpt.schedule.alpha_p, "alpha_q": ckpt.schedule.alpha_q, "alpha_t": ckpt.schedule.alpha_t},
        "train": train_config,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
