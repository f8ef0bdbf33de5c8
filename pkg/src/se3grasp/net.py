"""
Denoising network: an MLP over (pose, time, condition) predicting a
translational and a rotational 3-vector, with a taxonomy codebook,
classification and contact heads, the training loss with manual
backpropagation, and an Adam optimizer.
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Tuple
import numpy as np
from scipy.special import expit, log_softmax, softmax
from .errors import ConfigError
from .lie import Pose
log = logging.getLogger(__name__)
NUM_TAXONOMY_CLASSES = 33
NUM_CONTACT_REGIONS = 16
MODES = ("score", "flow")
Params = Dict[str, np.ndarray]
@dataclass(frozen=True)
class NetConfig:
    hidden: Tuple[int, ...] = (256, 256, 256, 256)
    time_embed_dim: int = 16
    feature_dim: int = 52
    codebook_dim: int = 16
    num_classes: int = NUM_TAXONOMY_CLASSES
    num_regions: int = NUM_CONTACT_REGIONS
    head_hidden: int = 64
    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        errors = []
        if not self.hidden or any(h < 1 for h in self.hidden):
            errors.append(f"net.hidden must be non-empty positive sizes, got {self.hidden}")
        if self.time_embed_dim < 2 or self.time_embed_dim % 2:
            errors.append(f"net.time_embed_dim must be even and >= 2, got {self.time_embed_dim}")
        for name in ("feature_dim", "codebook_dim", "num_classes", "num_regions", "head_hidden"):
            if getattr(self, name) < 1:
                errors.append(f"net.{name} must be positive, got {getattr(self, name)}")
        if errors:
            raise ConfigError(errors)
    @property
    def input_dim(self) -> int:
        return 12 + self.time_embed_dim + self.feature_dim + self.codebook_dim
@dataclass(frozen=True)
class ConditionBundle:
    """
    Batched condition: feature (B, D_c), class_label (B,), contact_target (B, K_r)
    and null_flag (B,) marking rows whose trunk conditioning is dropped.
    """
    feature: np.ndarray
    class_label: np.ndarray
    contact_target: np.ndarray
    null_flag: np.ndarray
    def __post_init__(self):
        feature = np.atleast_2d(np.asarray(self.feature, dtype=float))
        label = np.atleast_1d(np.asarray(self.class_label, dtype=int))
        contact = np.atleast_2d(np.asarray(self.contact_target, dtype=float))
        null = np.broadcast_to(np.asarray(self.null_flag, dtype=bool), label.shape).copy()
        n = feature.shape[0]
        if label.shape != (n,) or contact.shape[0] != n:
            raise ValueError(f"condition batch sizes differ: {feature.shape}, {label.shape}, {contact.shape}")
        if np.any(label < 0):
            raise ValueError("class_label must be non-negative")
        if np.any((contact < 0.0) | (contact > 1.0)):
            raise ValueError("contact_target entries must lie in [0, 1]")
        if not np.all(np.isfinite(feature)):
            raise ValueError("condition feature must be finite")
        object.__setattr__(self, "feature", feature)
        object.__setattr__(self, "class_label", label)
        object.__setattr__(self, "contact_target", contact)
        object.__setattr__(self, "null_flag", null)
    def __len__(self) -> int:
        return self.feature.shape[0]
    def take(self, index) -> "ConditionBundle":
        index = np.atleast_1d(index)
        return ConditionBundle(self.feature[index], self.class_label[index], self.contact_target[index], self.null_flag[index])
    def repeat(self, n: int) -> "ConditionBundle":
        """Broadcasts a single-row bundle to n rows."""
        if len(self) == n:
            return self
        if len(self) != 1:
            raise ValueError(f"cannot repeat a bundle of {len(self)} rows to {n}")
        return self.take(np.zeros(n, dtype=int))
    def with_null(self, flag) -> "ConditionBundle":
        return ConditionBundle(self.feature, self.class_label, self.contact_target, np.broadcast_to(flag, (len(self),)))
    @staticmethod
    def concat(bundles: List["ConditionBundle"]) -> "ConditionBundle":
        return ConditionBundle(
            np.concatenate([b.feature for b in bundles]),
            np.concatenate([b.class_label for b in bundles]),
            np.concatenate([b.contact_target for b in bundles]),
            np.concatenate([b.null_flag for b in bundles]),
        )
@dataclass(frozen=True)
class Codebook:
    gamma: np.ndarray
    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim != 2 or not np.all(np.isfinite(gamma)):
            raise ValueError("codebook must be a finite K × D_cb matrix")
        object.__setattr__(self, "gamma", gamma)
def codebook_mix(logits, cb: Codebook) -> np.ndarray:
    """Softmax-weighted mixture of codebook rows: γ̂ = Σ_k π_k γ_k."""
    probs = softmax(np.asarray(logits, dtype=float), axis=-1)
    return probs @ cb.gamma
def time_embed(t, dim: int) -> np.ndarray:
    """[sin(2^k π t), cos(2^k π t)] for k = 0 .. dim/2 − 1."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    freq = (2.0 ** np.arange(dim // 2)) * np.pi
    angles = t[:, None] * freq
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)
def silu(x: np.ndarray) -> np.ndarray:
    return x * expit(x)
def silu_grad(x: np.ndarray) -> np.ndarray:
    s = expit(x)
    return s * (1.0 + x * (1.0 - s))
def param_shapes(config: NetConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    """Parameter names and shapes in their declared (serialization) order."""
    shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    dims = [config.input_dim, *config.hidden]
    for i in range(len(config.hidden)):
        shapes[f"trunk.{i}.weight"] = (dims[i], dims[i + 1])
        shapes[f"trunk.{i}.bias"] = (dims[i + 1],)
    for head in ("head_p", "head_q"):
        shapes[f"{head}.weight"] = (dims[-1], 3)
        shapes[f"{head}.bias"] = (3,)
    for head, width in (("cls", config.num_classes), ("contact", config.num_regions)):
        shapes[f"{head}.0.weight"] = (config.feature_dim, config.head_hidden)
        shapes[f"{head}.0.bias"] = (config.head_hidden,)
        shapes[f"{head}.1.weight"] = (config.head_hidden, width)
        shapes[f"{head}.1.bias"] = (width,)
    shapes["codebook.gamma"] = (config.num_classes, config.codebook_dim)
    shapes["null.feature"] = (config.feature_dim,)
    shapes["null.gamma"] = (config.codebook_dim,)
    return shapes
def init_params(config: NetConfig, rng: np.random.Generator) -> Params:
    params: Params = OrderedDict()
    for name, shape in param_shapes(config).items():
        if name.endswith(".weight"):
            params[name] = rng.normal(0.0, 1.0 / np.sqrt(shape[0]), size=shape)
        elif name.endswith(".bias"):
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.normal(0.0, 0.1, size=shape)
    return params
@dataclass
class NetOutput:
    out_p: np.ndarray
    out_q: np.ndarray
    cls_logits: np.ndarray
    contact_logits: np.ndarray
@dataclass(frozen=True)
class LossWeights:
    gen: float = 1.0
    cls: float = 0.1
    cont: float = 0.1
    contact_pos_weight: float = 5.0
@dataclass
class LossBreakdown:
    total: float
    gen: float
    cls: float
    cont: float
    def scaled(self, factor: float) -> "LossBreakdown":
        return LossBreakdown(self.total * factor, self.gen * factor, self.cls * factor, self.cont * factor)
    def __add__(self, other: "LossBreakdown") -> "LossBreakdown":
        return LossBreakdown(self.total + other.total, self.gen + other.gen, self.cls + other.cls, self.cont + other.cont)
@dataclass(frozen=True)
class TrainingBatch:
    """Noisy poses with their times, conditions and regression targets."""
    g_t: Pose
    t: np.ndarray
    cond: ConditionBundle
    target_p: np.ndarray
    target_q: np.ndarray
    def __len__(self) -> int:
        return int(np.asarray(self.t).shape[0])
    def take(self, index) -> "TrainingBatch":
        return TrainingBatch(self.g_t[index], self.t[index], self.cond.take(index), self.target_p[index], self.target_q[index])
class VectorField(Protocol):  # pylint: disable=too-few-public-methods
    """Anything that predicts a (translational, rotational) field at poses g and times t."""
    def predict(self, g: Pose, t: np.ndarray, cond: ConditionBundle) -> Tuple[np.ndarray, np.ndarray]:
        ...
def _dense_backward(grads: Params, name: str, x: np.ndarray, dout: np.ndarray, weight: np.ndarray) -> np.ndarray:
    grads[f"{name}.weight"] += x.T @ dout
    grads[f"{name}.bias"] += dout.sum(axis=0)
    return dout @ weight.T
class Denoiser:
    """MLP denoiser holding its parameters; forward passes are read-only."""
    def __init__(self, config: NetConfig, params: Optional[Params] = None, seed: int = 0):
        self.config = config
        self.params: Params = params if params is not None else init_params(config, np.random.default_rng(seed))
        self._check_shapes()
    def _check_shapes(self) -> None:
        expected = param_shapes(self.config)
        errors = []
        for name, shape in expected.items():
            if name not in self.params:
                errors.append(f"missing parameter {name}")
            elif self.params[name].shape != shape:
                errors.append(f"parameter {name} has shape {self.params[name].shape}, expected {shape}")
        errors.extend(f"unexpected parameter {name}" for name in self.params if name not in expected)
        if errors:
            raise ConfigError(errors)
    @property
    def codebook(self) -> Codebook:
        return Codebook(self.params["codebook.gamma"])
    def _forward(self, g_t: Pose, t: np.ndarray, cond: ConditionBundle) -> Tuple[NetOutput, dict]:
        prm = self.params
        cfg = self.config
        n = len(cond)
        t = np.broadcast_to(np.asarray(t, dtype=float), (n,))
        if g_t.p.shape != (n, 3):
            raise ConfigError([f"pose batch {g_t.p.shape} does not match condition batch of {n}"])
        if cond.feature.shape[1] != cfg.feature_dim:
            raise ConfigError([f"condition feature has {cond.feature.shape[1]} dims, model expects {cfg.feature_dim}"])
        feat = cond.feature
        cls_pre = feat @ prm["cls.0.weight"] + prm["cls.0.bias"]
        cls_act = silu(cls_pre)
        cls_logits = cls_act @ prm["cls.1.weight"] + prm["cls.1.bias"]
        con_pre = feat @ prm["contact.0.weight"] + prm["contact.0.bias"]
        con_act = silu(con_pre)
        contact_logits = con_act @ prm["contact.1.weight"] + prm["contact.1.bias"]
        probs = softmax(cls_logits, axis=-1)
        gamma_hat = probs @ prm["codebook.gamma"]
        null = cond.null_flag[:, None]
        feat_in = np.where(null, prm["null.feature"], feat)
        gamma_in = np.where(null, prm["null.gamma"], gamma_hat)
        x = np.concatenate(
            [g_t.p, g_t.rotation_matrix().reshape(n, 9), time_embed(t, cfg.time_embed_dim), feat_in, gamma_in],
            axis=-1,
        )
        inputs, pres = [], []
        for i in range(len(cfg.hidden)):
            inputs.append(x)
            pre = x @ prm[f"trunk.{i}.weight"] + prm[f"trunk.{i}.bias"]
            pres.append(pre)
            x = silu(pre)
        out = NetOutput(
            out_p=x @ prm["head_p.weight"] + prm["head_p.bias"],
            out_q=x @ prm["head_q.weight"] + prm["head_q.bias"],
            cls_logits=cls_logits,
            contact_logits=contact_logits,
        )
        cache = {
            "feat": feat, "cls_pre": cls_pre, "cls_act": cls_act, "con_pre": con_pre, "con_act": con_act,
            "probs": probs, "null": cond.null_flag, "inputs": inputs, "pres": pres, "last": x,
        }
        return out, cache
    def forward(self, g_t: Pose, t, cond: ConditionBundle) -> NetOutput:
        return self._forward(g_t, t, cond)[0]
    def predict(self, g: Pose, t, cond: ConditionBundle) -> Tuple[np.ndarray, np.ndarray]:
        out = self.forward(g, t, cond)
        return out.out_p, out.out_q
    def _backward(self, cache: dict, d_out_p, d_out_q, d_cls, d_contact) -> Params:
        prm = self.params
        cfg = self.config
        grads: Params = OrderedDict((k, np.zeros_like(v)) for k, v in prm.items())
        last = cache["last"]
        dx = _dense_backward(grads, "head_p", last, d_out_p, prm["head_p.weight"])
        dx = dx + _dense_backward(grads, "head_q", last, d_out_q, prm["head_q.weight"])
        for i in reversed(range(len(cfg.hidden))):
            dpre = dx * silu_grad(cache["pres"][i])
            dx = _dense_backward(grads, f"trunk.{i}", cache["inputs"][i], dpre, prm[f"trunk.{i}.weight"])
        offset = 12 + cfg.time_embed_dim
        d_feat_in = dx[:, offset:offset + cfg.feature_dim]
        d_gamma_in = dx[:, offset + cfg.feature_dim:]
        null = cache["null"]
        grads["null.feature"] += d_feat_in[null].sum(axis=0)
        grads["null.gamma"] += d_gamma_in[null].sum(axis=0)
        d_gamma_hat = np.where(null[:, None], 0.0, d_gamma_in)
        probs = cache["probs"]
        grads["codebook.gamma"] += probs.T @ d_gamma_hat
        d_probs = d_gamma_hat @ prm["codebook.gamma"].T
        d_cls = d_cls + probs * (d_probs - np.sum(probs * d_probs, axis=-1, keepdims=True))
        d_act = _dense_backward(grads, "cls.1", cache["cls_act"], d_cls, prm["cls.1.weight"])
        _dense_backward(grads, "cls.0", cache["feat"], d_act * silu_grad(cache["cls_pre"]), prm["cls.0.weight"])
        d_act = _dense_backward(grads, "contact.1", cache["con_act"], d_contact, prm["contact.1.weight"])
        _dense_backward(grads, "contact.0", cache["feat"], d_act * silu_grad(cache["con_pre"]), prm["contact.0.weight"])
        return grads
    def loss_and_grad(
        self, batch: TrainingBatch, mode: str, weights: LossWeights = LossWeights()
    ) -> Tuple[LossBreakdown, Params]:
        """
        Computes λ_gen·MSE + λ_cls·CE + λ_cont·weighted BCE and its gradient.
        Args:
            batch: Noisy poses, times, conditions and targets for one mode.
            mode: "score" or "flow"; targets must already match the mode.
            weights: Loss weights and the positive-class contact weight.
        Returns:
            Tuple of (LossBreakdown, gradients keyed like params).
        Raises:
            ValueError: If the batch is empty or the mode is unknown.
        """
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        n = len(batch)
        if n == 0:
            raise ValueError("empty training batch")
        out, cache = self._forward(batch.g_t, batch.t, batch.cond)
        res_p = out.out_p - batch.target_p
        res_q = out.out_q - batch.target_q
        gen = float(np.mean(np.sum(res_p**2, axis=-1) + np.sum(res_q**2, axis=-1)))
        labels = batch.cond.class_label
        if np.any(labels >= self.config.num_classes):
            raise ValueError(f"class_label must be below {self.config.num_classes}")
        logp = log_softmax(out.cls_logits, axis=-1)
        cls = float(-np.mean(logp[np.arange(n), labels]))
        onehot = np.zeros_like(logp)
        onehot[np.arange(n), labels] = 1.0
        target = batch.cond.contact_target
        logits = out.contact_logits
        w1 = weights.contact_pos_weight
        per_entry = w1 * target * np.logaddexp(0.0, -logits) + (1.0 - target) * np.logaddexp(0.0, logits)
        cont = float(np.mean(per_entry))
        sig = expit(logits)
        d_contact = weights.cont * (w1 * target * (sig - 1.0) + (1.0 - target) * sig) / per_entry.size
        grads = self._backward(
            cache,
            weights.gen * 2.0 * res_p / n,
            weights.gen * 2.0 * res_q / n,
            weights.cls * (np.exp(logp) - onehot) / n,
            d_contact,
        )
        total = weights.gen * gen + weights.cls * cls + weights.cont * cont
        return LossBreakdown(total, gen, cls, cont), grads
@dataclass
class AdamState:
    m: Params = field(default_factory=OrderedDict)
    v: Params = field(default_factory=OrderedDict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    @classmethod
    def zeros_like(cls, params: Params, beta1: float = 0.9, beta2: float = 0.999) -> "AdamState":
        return cls(
            OrderedDict((k, np.zeros_like(v)) for k, v in params.items()),
            OrderedDict((k, np.zeros_like(v)) for k, v in params.items()),
            0,
            beta1,
            beta2,
        )
def adam_step(params: Params, grads: Params, state: AdamState, lr: float) -> Params:
    """One bias-corrected Adam update; returns new params and advances state in place."""
    if set(params) != set(grads):
        raise ValueError("params and grads have different keys")
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    updated: Params = OrderedDict()
    for name, value in params.items():
        g = grads[name]
        if g.shape != value.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {value.shape}")
        m = state.beta1 * state.m.get(name, np.zeros_like(value)) + (1.0 - state.beta1) * g
        v = state.beta2 * state.v.get(name, np.zeros_like(value)) + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        updated[name] = value - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return updated
