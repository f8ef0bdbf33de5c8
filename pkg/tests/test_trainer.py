# pylint: disable=missing-module-docstring, missing-class-docstring, missing-function-docstring, redefined-outer-name
import unittest
import numpy as np
import pytest
from src.se3grasp.datagen import GraspDataset, HandProxy, SceneRecord, hand_layout
from src.se3grasp.diff import SdeSamplerConfig, sample_reverse_sde
from src.se3grasp.errors import ConfigError, DatasetError
from src.se3grasp.flow import OdeSamplerConfig, sample_euler, sample_flow, sample_rk4
from src.se3grasp.lie import Pose, exp_so3
from src.se3grasp.metrics import GraspSet, assignment_emd
from src.se3grasp.net import ConditionBundle, Denoiser, NetConfig
from src.se3grasp.schedule import NoiseSchedule, sample_prior
from src.se3grasp.trainer import OptimConfig, Trainer
SMALL = NetConfig(hidden=(16, 16), time_embed_dim=4, feature_dim=5, codebook_dim=3, num_classes=4, num_regions=3, head_hidden=8)
def tiny_dataset(scenes: int = 3, grasps: int = 5, seed: int = 0) -> GraspDataset:
    rng = np.random.default_rng(seed)
    hand = HandProxy(hand_layout(0.5), Pose.identity())
    records = []
    for i in range(scenes):
        phi = 0.3 * rng.normal(size=(grasps, 3))
        records.append(
            SceneRecord(
                scene_id=i,
                class_name="tripod",
                mesh_kind="sphere",
                mesh_dimensions=(0.03,),
                hand=hand,
                condition=ConditionBundle(rng.normal(size=(1, SMALL.feature_dim)), [i % SMALL.num_classes], rng.random((1, SMALL.num_regions)), False),
                grasps=Pose(0.05 * rng.normal(size=(grasps, 3)), exp_so3(phi)),
                widths=np.full(grasps, 0.04),
                regions=np.tile([1, 10], (grasps, 1)),
            )
        )
    return GraspDataset({"schema_version": 1}, records)
class TestOptimConfig(unittest.TestCase):
    def test_defaults_are_valid(self):
        cfg = OptimConfig()
        self.assertEqual(cfg.batch, 256)
        self.assertEqual(cfg.loss_weights.contact_pos_weight, 5.0)
    def test_collects_every_violation(self):
        with self.assertRaises(ConfigError) as ctx:
            OptimConfig(lr=0.0, steps=0, cond_dropout=1.0)
        self.assertEqual(len(ctx.exception.violations), 3)
    def test_shards_cannot_exceed_batch(self):
        with self.assertRaises(ConfigError):
            OptimConfig(batch=2, grad_shards=4)
class TestTrainer(unittest.TestCase):
    def setUp(self):
        self.dataset = tiny_dataset()
        self.optim = OptimConfig(lr=1e-2, steps=3, batch=12, grad_shards=3, log_every=1)
    def make(self, mode: str, workers: int = 1) -> Trainer:
        return Trainer(Denoiser(SMALL, seed=0), self.dataset, mode, NoiseSchedule(), self.optim, seed=4, workers=workers)
    def test_rejects_unknown_mode(self):
        with self.assertRaises(ConfigError):
            self.make("diffusion")
    def test_rejects_empty_dataset(self):
        with self.assertRaises(DatasetError):
            Trainer(Denoiser(SMALL), GraspDataset({}, []), "flow", NoiseSchedule(), self.optim)
    def test_batch_shapes(self):
        for mode in ("score", "flow"):
            with self.subTest(mode=mode):
                batch = self.make(mode).make_batch(np.random.default_rng(0))
                self.assertEqual(len(batch), 12)
                self.assertEqual(batch.target_p.shape, (12, 3))
                self.assertEqual(batch.target_q.shape, (12, 3))
                self.assertEqual(batch.cond.feature.shape, (12, SMALL.feature_dim))
                self.assertTrue(np.all((batch.t >= 0.0) & (batch.t <= 1.0)))
    def test_condition_dropout_marks_rows(self):
        optim = OptimConfig(batch=2000, grad_shards=1, cond_dropout=0.25)
        trainer = Trainer(Denoiser(SMALL), self.dataset, "flow", NoiseSchedule(), optim)
        share = trainer.make_batch(np.random.default_rng(1)).cond.null_flag.mean()
        self.assertAlmostEqual(share, 0.25, delta=0.04)
    def test_fit_returns_history(self):
        history = self.make("score").fit()
        self.assertEqual(len(history), 3)
        self.assertTrue(all(np.isfinite(h.total) for h in history))
def test_result_does_not_depend_on_worker_count():
    dataset = tiny_dataset()
    optim = OptimConfig(lr=1e-2, steps=4, batch=12, grad_shards=3)
    params = []
    for workers in (1, 3):
        trainer = Trainer(Denoiser(SMALL, seed=0), dataset, "flow", NoiseSchedule(), optim, seed=9, workers=workers)
        trainer.fit()
        params.append(trainer.model.params)
    for name, value in params[0].items():
        np.testing.assert_array_equal(params[1][name], value)
def test_same_seed_same_model():
    dataset = tiny_dataset()
    optim = OptimConfig(lr=1e-2, steps=2, batch=8, grad_shards=2)
    runs = [Trainer(Denoiser(SMALL, seed=0), dataset, "score", NoiseSchedule(), optim, seed=5) for _ in range(2)]
    for trainer in runs:
        trainer.fit()
    for name, value in runs[0].model.params.items():
        np.testing.assert_array_equal(runs[1].model.params[name], value)
@pytest.mark.slow
def test_flow_loss_decreases():
    dataset = tiny_dataset(scenes=2, grasps=1, seed=3)
    optim = OptimConfig(lr=3e-3, steps=300, batch=64, grad_shards=2, cond_dropout=0.0, log_every=100)
    history = Trainer(Denoiser(SMALL, seed=1), dataset, "flow", NoiseSchedule(), optim, seed=2).fit()
    first = np.mean([h.gen for h in history[:20]])
    last = np.mean([h.gen for h in history[-20:]])
    assert last < first
MODES_NET = NetConfig(hidden=(64, 64), time_embed_dim=8, feature_dim=5, codebook_dim=3, num_classes=4, num_regions=3, head_hidden=8)
MODES_SCHED = NoiseSchedule(alpha_q=0.05)
MODE_CENTERS = np.array([[0.1, 0.0, 0.0], [-0.1, 0.0, 0.0]])
def two_mode_dataset() -> GraspDataset:
    rng = np.random.default_rng(0)
    record = SceneRecord(
        scene_id=0,
        class_name="tripod",
        mesh_kind="box",
        mesh_dimensions=(0.04, 0.1, 0.2),
        hand=HandProxy(hand_layout(0.5), Pose.identity()),
        condition=ConditionBundle(rng.normal(size=(1, MODES_NET.feature_dim)), [0], rng.random((1, MODES_NET.num_regions)), False),
        grasps=Pose(MODE_CENTERS, np.tile([1.0, 0.0, 0.0, 0.0], (2, 1))),
        widths=np.full(2, 0.04),
        regions=np.tile([1, 10], (2, 1)),
    )
    return GraspDataset({"schema_version": 1}, [record])
@pytest.fixture(scope="module")
def two_mode_models():
    dataset = two_mode_dataset()
    models = {}
    for mode in ("score", "flow"):
        optim = OptimConfig(lr=2e-3, steps=3000, batch=128, grad_shards=1, cond_dropout=0.0, t_min=0.02, log_every=1000)
        trainer = Trainer(Denoiser(MODES_NET, seed=0), dataset, mode, MODES_SCHED, optim, seed=1)
        trainer.fit()
        models[mode] = trainer.model
    return dataset.scenes[0].condition, models
def nearest_mode(poses: Pose):
    dist = np.stack([np.linalg.norm(poses.p - c, axis=-1) for c in MODE_CENTERS], axis=-1)
    return dist.min(axis=-1), dist.argmin(axis=-1)
@pytest.mark.slow
@pytest.mark.parametrize("mode", ["score", "flow"])
def test_trained_model_covers_both_modes(two_mode_models, mode):
    cond, models = two_mode_models
    rng = np.random.default_rng(30)
    if mode == "score":
        cfg = SdeSamplerConfig(steps=100, schedule=MODES_SCHED, cfg_weight=1.0, t_min=0.02)
        out = sample_reverse_sde(models[mode], cond, cfg, rng, n=256)
    else:
        out = sample_flow(models[mode], cond, OdeSamplerConfig(steps=40, schedule=MODES_SCHED, cfg_weight=1.0), rng, n=256)
    prior_dist, _ = nearest_mode(sample_prior(MODES_SCHED, np.random.default_rng(31), 256))
    dist, label = nearest_mode(out)
    assert np.median(dist) < 0.1
    assert np.median(dist) < 0.5 * np.median(prior_dist)
    share = np.mean(label == 0)
    assert 0.2 <= share <= 0.8
@pytest.mark.slow
def test_rk4_with_few_steps_matches_euler(two_mode_models):
    cond, models = two_mode_models
    start = sample_prior(MODES_SCHED, np.random.default_rng(32), 256)
    runs = {}
    for solver, steps in (("euler", 40), ("rk4", 10)):
        cfg = OdeSamplerConfig(steps=steps, solver=solver, schedule=MODES_SCHED, cfg_weight=1.0)
        sampler = sample_rk4 if solver == "rk4" else sample_euler
        runs[solver] = sampler(models["flow"], cond, cfg, np.random.default_rng(33), n=256, g_init=start)
    assert assignment_emd(GraspSet(runs["rk4"]), GraspSet(runs["euler"], "ground-truth")) < 0.05
