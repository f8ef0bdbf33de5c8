"""
Training loop shared by both branches: draws batches of grasps from the
dataset, builds mode-specific regression targets, applies condition
dropout and updates the denoiser with Adam.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List
import numpy as np
from .datagen import GraspDataset
from .diff import score_training_pair
from .errors import ConfigError, DatasetError
from .flow import flow_training_pair
from .lie import Pose
from .net import MODES, AdamState, ConditionBundle, Denoiser, LossBreakdown, LossWeights, TrainingBatch, adam_step
from .schedule import T_MIN, NoiseSchedule, stream_rng
log = logging.getLogger(__name__)
TRAIN_STREAM = 2
@dataclass(frozen=True)
class OptimConfig:
    lr: float = 1e-3
    steps: int = 4000
    batch: int = 256
    grad_shards: int = 4
    cond_dropout: float = 0.1
    t_min: float = T_MIN
    lambda_gen: float = 1.0
    lambda_cls: float = 0.1
    lambda_cont: float = 0.1
    contact_pos_weight: float = 5.0
    log_every: int = 200
    def __post_init__(self):
        errors = []
        if not self.lr > 0.0:
            errors.append(f"optim.lr must be positive, got {self.lr}")
        for name in ("steps", "batch", "grad_shards", "log_every"):
            if getattr(self, name) < 1:
                errors.append(f"optim.{name} must be >= 1, got {getattr(self, name)}")
        if self.grad_shards > self.batch:
            errors.append("optim.grad_shards must not exceed optim.batch")
        if not 0.0 <= self.cond_dropout < 1.0:
            errors.append(f"optim.cond_dropout must lie in [0, 1), got {self.cond_dropout}")
        if not 0.0 < self.t_min < 1.0:
            errors.append(f"optim.t_min must lie in (0, 1), got {self.t_min}")
        if min(self.lambda_gen, self.lambda_cls, self.lambda_cont, self.contact_pos_weight) < 0.0:
            errors.append("optim loss weights must be non-negative")
        if errors:
            raise ConfigError(errors)
    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.lambda_gen, self.lambda_cls, self.lambda_cont, self.contact_pos_weight)
class Trainer:
    """Fits a Denoiser to a GraspDataset in one mode ("score" or "flow")."""
    def __init__(
        self,
        model: Denoiser,
        dataset: GraspDataset,
        mode: str,
        schedule: NoiseSchedule,
        optim: OptimConfig,
        seed: int = 0,
        workers: int = 1,
    ):
        if mode not in MODES:
            raise ConfigError([f"mode must be one of {MODES}, got {mode!r}"])
        if len(dataset) == 0:
            raise DatasetError("cannot train on an empty dataset")
        self.model = model
        self.dataset = dataset
        self.mode = mode
        self.schedule = schedule
        self.optim = optim
        self.seed = seed
        self.workers = max(1, workers)
        self.state = AdamState.zeros_like(model.params)
        self._conditions = ConditionBundle.concat([scene.condition for scene in dataset.scenes])
        self._grasps = Pose.stack([scene.grasps for scene in dataset.scenes])
        self._counts = np.array([len(scene.grasps) for scene in dataset.scenes])
        self._offsets = np.concatenate([[0], np.cumsum(self._counts)[:-1]])
    def make_batch(self, rng: np.random.Generator) -> TrainingBatch:
        """Samples scenes uniformly, one grasp per draw, and builds targets for the mode."""
        size = self.optim.batch
        scenes = rng.integers(len(self.dataset), size=size)
        g1 = self._grasps[self._offsets[scenes] + rng.integers(self._counts[scenes])]
        cond = self._conditions.take(scenes).with_null(rng.random(size) < self.optim.cond_dropout)
        if self.mode == "score":
            sample, (target_p, target_q) = score_training_pair(g1, self.schedule, rng, t_min=self.optim.t_min)
            return TrainingBatch(sample.g_t, sample.t, cond, target_p, target_q)
        pair = flow_training_pair(g1, self.schedule, rng)
        return TrainingBatch(pair.g_t, pair.t, cond, pair.dp_t, pair.dphi)
    def step(self, rng: np.random.Generator) -> LossBreakdown:
        """
        One optimizer update. The batch is split into a fixed number of shards
        whose gradients are summed in shard order, so the result does not
        depend on the worker count.
        """
        batch = self.make_batch(rng)
        shards = np.array_split(np.arange(len(batch)), self.optim.grad_shards)
        weights = self.optim.loss_weights
        def shard_grad(index):
            loss, grads = self.model.loss_and_grad(batch.take(index), self.mode, weights)
            factor = len(index) / len(batch)
            return loss.scaled(factor), {k: v * factor for k, v in grads.items()}
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            results = list(pool.map(shard_grad, shards))
        loss = results[0][0]
        grads = results[0][1]
        for part_loss, part_grads in results[1:]:
            loss = loss + part_loss
            grads = {k: grads[k] + part_grads[k] for k in grads}
        self.model.params = adam_step(self.model.params, grads, self.state, self.optim.lr)
        return loss
    def fit(self) -> List[LossBreakdown]:
        history = []
        log.info("Training %s model for %d steps (batch %d)", self.mode, self.optim.steps, self.optim.batch)
        for step in range(1, self.optim.steps + 1):
            loss = self.step(stream_rng(self.seed, TRAIN_STREAM, step))
            history.append(loss)
            if step % self.optim.log_every == 0 or step == self.optim.steps:
                log.info(
                    "step %d/%d loss=%.5f gen=%.5f cls=%.5f cont=%.5f",
                    step, self.optim.steps, loss.total, loss.gen, loss.cls, loss.cont,
                )
        return history
