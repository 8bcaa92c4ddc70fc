"""Model assembly (encoder stack + task head) and checkpoint files.

Checkpoints are little-endian binary: magic ``ACPT``, version u16, a u32
length-prefixed JSON header (config, input dim, seed, optimizer step,
trained flag), then a u64 record count and per-record
``[key_len u16][key][rows u32][cols u32][rows*cols float64]`` tensors.
Parameter values are stored alongside Adam moments, so evaluation after a
round-trip is bit-for-bit identical.
"""
from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import FormatError, ShapeMismatch
from .heads import BilinearLinkHead, SoftmaxGraphHead
from .layers import make_layer
from .optim import Adam
from .structure import GraphTensors

ARCHS = ("gcn", "sage", "gat")
HEADS = ("link", "classifier")

CKPT_MAGIC = b"ACPT"
CKPT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    arch: str
    num_layers: int = 1
    hidden: int = 256
    head: str = "link"
    heads: int = 1          # attention heads; single-head only

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValueError(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if self.num_layers not in (1, 3):
            raise ValueError(f"num_layers must be 1 or 3, got {self.num_layers}")
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.heads != 1:
            raise ValueError("only one attention head is supported")

    @property
    def label(self) -> str:
        return f"{self.arch}-{self.num_layers}"


class Model:
    """Encoder + head with explicit forward/backward passes.

    One training loop owns a model exclusively; forward-only inference on
    a finished model is safe to share.
    """

    def __init__(self, config: ModelConfig, in_dim: int, seed=0):
        self.config = config
        self.in_dim = in_dim
        self.seed = seed if isinstance(seed, int) else -1
        self.trained = False
        rng = np.random.Generator(np.random.Philox(seed))
        dims = [in_dim] + [config.hidden] * config.num_layers
        self.layers = [
            make_layer(config.arch, f"enc{k}", dims[k], dims[k + 1], rng)
            for k in range(config.num_layers)
        ]
        if config.head == "link":
            self.head = BilinearLinkHead(config.hidden, rng)
        else:
            self.head = SoftmaxGraphHead(config.hidden, 2, rng)
        self.params: dict[str, "Parameter"] = {}
        for layer in self.layers:
            for p in layer.params:
                self.params[p.name] = p
        for p in self.head.params:
            self.params[p.name] = p

    # -- encoder -----------------------------------------------------------

    def encode(self, gt: GraphTensors, edge_weight=None, feat_mask=None):
        if gt.x.shape[1] != self.in_dim:
            raise ShapeMismatch(
                f"graph features have dim {gt.x.shape[1]}, model expects {self.in_dim}"
            )
        X = gt.x if feat_mask is None else gt.x * feat_mask
        self._enc_cache = (gt, feat_mask)
        H = X
        for layer in self.layers:
            H = layer.forward(gt, H, edge_weight)
        return H

    def encoder_backward(self, dH: np.ndarray) -> dict:
        gt, feat_mask = self._enc_cache
        d_edge_weight = np.zeros(gt.num_edges)
        for layer in reversed(self.layers):
            dH, d_ew = layer.backward(dH)
            d_edge_weight += d_ew
        dX = dH
        out = {"d_x": dX, "d_edge_weight": d_edge_weight}
        if feat_mask is not None:
            out["d_feat_mask"] = (dX * gt.x).sum(axis=0)
        return out

    # -- task forwards -------------------------------------------------------

    def forward_link(self, gt: GraphTensors, src, dst,
                     edge_weight=None, feat_mask=None):
        H = self.encode(gt, edge_weight, feat_mask)
        return self.head.forward(H, np.asarray(src, dtype=np.int64),
                                 np.asarray(dst, dtype=np.int64))

    def forward_clf(self, gt: GraphTensors, edge_weight=None, feat_mask=None):
        H = self.encode(gt, edge_weight, feat_mask)
        return self.head.forward(H)

    def backward_from_head(self, d_head: np.ndarray) -> dict:
        dH = self.head.backward(d_head)
        return self.encoder_backward(dH)

    # -- utilities -----------------------------------------------------------

    def zero_grads(self):
        for p in self.params.values():
            p.zero_grad()

    def kink_margin(self) -> float:
        """Smallest |pre-activation| seen in the last forward pass; used by
        gradient checks to stay away from ReLU/LeakyReLU kinks."""
        return min(layer.kink_margin() for layer in self.layers)

    def state_values(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.params.items()}

    def load_state_values(self, values: dict[str, np.ndarray]):
        for name, p in self.params.items():
            p.value[:] = values[name]


def save_checkpoint(path, model: Model, adam: Adam | None = None) -> None:
    header = {
        "config": asdict(model.config),
        "in_dim": model.in_dim,
        "seed": model.seed,
        "step": adam.t if adam is not None else 0,
        "trained": model.trained,
    }
    tensors: dict[str, np.ndarray] = {n: p.value for n, p in model.params.items()}
    if adam is not None:
        tensors.update(adam.state_arrays())
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sH", CKPT_MAGIC, CKPT_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(struct.pack("<Q", len(tensors)))
        for key, arr in tensors.items():
            raw = key.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[Model, Adam]:
    with open(path, "rb") as fh:
        blob = fh.read()

    def take(fmt, off):
        size = struct.calcsize(fmt)
        if off + size > len(blob):
            raise FormatError(f"{path}: truncated at byte {off}")
        return struct.unpack_from(fmt, blob, off), off + size

    (magic, version), off = take("<4sH", 0)
    if magic != CKPT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != CKPT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (hlen,), off = take("<I", off)
    header = json.loads(blob[off:off + hlen].decode("utf-8"))
    off += hlen
    (count,), off = take("<Q", off)
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (klen,), off = take("<H", off)
        key = blob[off:off + klen].decode("utf-8")
        off += klen
        (rows, cols), off = take("<II", off)
        nbytes = rows * cols * 8
        if off + nbytes > len(blob):
            raise FormatError(f"{path}: truncated at byte {off}")
        tensors[key] = np.frombuffer(blob, dtype="<f8", count=rows * cols,
                                     offset=off).reshape(rows, cols).copy()
        off += nbytes

    config = ModelConfig(**header["config"])
    model = Model(config, header["in_dim"], seed=header["seed"])
    model.trained = bool(header.get("trained", False))
    for name, p in model.params.items():
        if name not in tensors:
            raise FormatError(f"{path}: missing tensor {name!r}")
        p.value[:] = tensors[name]
    adam = Adam(model.params.values())
    adam.load_state_arrays(tensors, t=int(header.get("step", 0)))
    return model, adam
