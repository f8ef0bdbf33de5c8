"""
Command implementations behind the CLI: dataset generation, training,
sampling, evaluation, Z-only ICP and IGSO(3) table dumps. Each command
takes a validated RunConfig and a FileWriter and returns an exit code.
"""
import csv
import io
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence
import numpy as np
from scipy.special import expit
from .checkpoint import Checkpoint, checkpoint_sidecar, decode_checkpoint, encode_checkpoint
from .config import RunConfig
from .datagen import GraspDataset, build_dataset, revalidate
from .diff import sample_reverse_sde
from .errors import CheckpointError, ConfigError, DatasetError, MissingInputError
from .file_writer import FileWriter
from .flow import sample_flow
from .guidance import alignment_fraction
from .igso3 import TABLES, dump_table_csv
from .lie import Pose
from .metrics import GraspSet, assignment_emd, contact_accuracy, taxonomy_accuracy
from .net import MODES, ConditionBundle, Denoiser
from .path_resolver import PathResolver
from .register import PointCloud, z_only_icp
from .schedule import stream_rng
from .trainer import Trainer
log = logging.getLogger(__name__)
SAMPLE_STREAM = 3
POSE_COLUMNS = ["scene_id", "sample_id", "mode", "solver", "seed", "steps", "cfg_weight", "config_hash",
                "px", "py", "pz", "qw", "qx", "qy", "qz"]
EVAL_SCENES = "eval_scenes.csv"
EVAL_SUMMARY = "eval_summary.json"
def checkpoint_name(mode: str) -> str:
    return f"model_{mode}.ckpt"
def samples_name(mode: str) -> str:
    return f"samples_{mode}.csv"
def require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise MissingInputError(f"{what} not found: {path}")
    return path
def read_dataset(path: Path) -> GraspDataset:
    require_file(path, "dataset")
    dataset = GraspDataset.from_jsonl(path.read_text(encoding="utf-8"))
    if not dataset.scenes:
        raise DatasetError(f"dataset {path} holds no scenes")
    log.info("Loaded %d scenes from %s", len(dataset), path)
    return dataset
def read_checkpoint(path: Path) -> Checkpoint:
    require_file(path, "checkpoint")
    return decode_checkpoint(path.read_bytes())
def echo_config(cfg: RunConfig, writer: FileWriter) -> None:
    payload = cfg.to_dict()
    payload["config_hash"] = cfg.config_hash()
    writer.write_json(payload, cfg.output_path() / "config.json")
def cmd_datagen(cfg: RunConfig, writer: FileWriter, check: bool = False) -> int:
    """Generates the dataset, or with check=True re-validates an existing one."""
    path = cfg.dataset_path()
    if check:
        report = revalidate(read_dataset(path))
        for failure in report.failures[:20]:
            log.error("Invalid grasp: %s", failure)
        return 0 if report.ok else 1
    dataset = build_dataset(cfg.datagen, cfg.seed, cfg.config_hash(), cfg.workers)
    if not dataset.scenes:
        raise DatasetError("every scene was dropped; raise datagen.ray_budget or lower datagen.min_grasps")
    echo_config(cfg, writer)
    writer.write_text(dataset.to_jsonl(), path)
    log.info("[Written] %s", path)
    return 0
def cmd_train(cfg: RunConfig, writer: FileWriter) -> int:
    dataset = read_dataset(cfg.dataset_path())
    model = Denoiser(cfg.net.to_config(dataset.feature_dim), seed=cfg.seed)
    history = Trainer(model, dataset, cfg.mode, cfg.schedule, cfg.optim, cfg.seed, cfg.workers).fit()
    ckpt = Checkpoint(model, cfg.schedule, cfg.mode)
    target = cfg.output_path() / checkpoint_name(cfg.mode)
    echo_config(cfg, writer)
    writer.write(encode_checkpoint(model, cfg.schedule, cfg.mode), target)
    train_info = {"optim": asdict(cfg.optim), "final_loss": history[-1].total, "dataset": str(cfg.dataset_path())}
    writer.write_text(checkpoint_sidecar(ckpt, cfg.seed, cfg.config_hash(), train_info), target.with_suffix(".json"))
    log.info("[Written] %s", target)
    return 0
def _sample_scene(cfg: RunConfig, ckpt: Checkpoint, scene) -> Pose:
    rng = stream_rng(cfg.seed, SAMPLE_STREAM, scene.scene_id)
    n = cfg.sampler.samples_per_scene
    if ckpt.mode == "score":
        return sample_reverse_sde(ckpt.model, scene.condition, cfg.sde_config(ckpt.schedule), rng, n)
    return sample_flow(ckpt.model, scene.condition, cfg.ode_config(ckpt.schedule), rng, n)
def cmd_sample(cfg: RunConfig, writer: FileWriter, checkpoint: Optional[Path] = None) -> int:
    """Draws samples_per_scene grasps for every dataset scene and writes a pose CSV."""
    ckpt_path = checkpoint or cfg.output_path() / checkpoint_name(cfg.mode)
    require_file(ckpt_path, "checkpoint")
    dataset = read_dataset(cfg.dataset_path())
    ckpt = read_checkpoint(ckpt_path)
    if ckpt.mode != cfg.mode:
        raise ConfigError([f"checkpoint {ckpt_path} was trained in {ckpt.mode} mode, run mode is {cfg.mode}"])
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        samples = list(pool.map(lambda scene: _sample_scene(cfg, ckpt, scene), dataset.scenes))
    solver = "sde" if cfg.mode == "score" else cfg.sampler.solver
    steps = cfg.sampler_steps()
    config_hash = cfg.config_hash()
    buffer = io.StringIO()
    out = csv.writer(buffer, lineterminator="\n")
    out.writerow(POSE_COLUMNS)
    for scene, poses in zip(dataset.scenes, samples):
        for idx, row in enumerate(poses.to_rows()):
            meta = [scene.scene_id, idx, cfg.mode, solver, cfg.seed, steps, repr(cfg.sampler.cfg_weight), config_hash]
            out.writerow(meta + [repr(float(v)) for v in row])
    guidance = cfg.guidance.to_config()
    aligned = alignment_fraction(np.concatenate([p.q for p in samples]), guidance)
    log.info("Sampled %d scenes × %d grasps; %.1f%% aligned (c >= %.2f)",
             len(samples), cfg.sampler.samples_per_scene, aligned, guidance.theta_thr)
    echo_config(cfg, writer)
    target = cfg.output_path() / samples_name(cfg.mode)
    writer.write_text(buffer.getvalue(), target)
    log.info("[Written] %s", target)
    return 0
def read_pose_csvs(paths: Sequence[Path]) -> Dict[str, Dict[int, np.ndarray]]:
    """Groups pose rows by mode and scene id."""
    grouped: Dict[str, Dict[int, List[List[float]]]] = defaultdict(lambda: defaultdict(list))
    seen: Dict[str, Path] = {}
    for path in paths:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            missing = set(POSE_COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise DatasetError(f"{path} lacks pose columns {sorted(missing)}")
            modes = set()
            for row in reader:
                modes.add(row["mode"])
                grouped[row["mode"]][int(row["scene_id"])].append([float(row[c]) for c in POSE_COLUMNS[8:]])
        for mode in modes:
            if mode in seen:
                raise ConfigError([f"pose files {seen[mode]} and {path} both hold {mode} samples"])
            seen[mode] = path
    return {mode: {sid: np.array(rows) for sid, rows in scenes.items()} for mode, scenes in grouped.items()}
def _head_metrics(model: Denoiser, dataset: GraspDataset, threshold: float) -> List[Dict[str, float]]:
    scenes = dataset.scenes
    cond = ConditionBundle.concat([s.condition for s in scenes])
    out = model.forward(Pose.identity(len(scenes)), np.zeros(len(scenes)), cond)
    probs = expit(out.contact_logits)
    return [
        {
            "ta": taxonomy_accuracy(out.cls_logits[i:i + 1], cond.class_label[i:i + 1]),
            "ca": contact_accuracy(probs[i], cond.contact_target[i], threshold),
        }
        for i in range(len(scenes))
    ]
def _summary(values: List[float]) -> Dict[str, float]:
    arr = np.array([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": float(arr.mean()), "std": float(arr.std()), "n": int(arr.size)}
def cmd_eval(cfg: RunConfig, writer: FileWriter, pose_paths: Sequence[str] = (), checkpoints: Sequence[Path] = ()) -> int:
    """
    Scores generated grasps against the dataset: EMD per scene and mode, plus
    taxonomy/contact accuracy of each mode's checkpoint heads, overall and per class.
    """
    out_dir = cfg.output_path()
    files = PathResolver.gather_files(list(pose_paths) or [str(out_dir / "samples_*.csv")])
    if not files:
        raise MissingInputError(f"no pose CSV found for {list(pose_paths) or out_dir}")
    dataset = read_dataset(cfg.dataset_path())
    generated = read_pose_csvs(files)
    modes = [m for m in MODES if m in generated]
    unknown = set(generated) - set(modes)
    if unknown:
        raise DatasetError(f"unknown modes in pose files: {sorted(unknown)}")
    ckpt_paths = {m: out_dir / checkpoint_name(m) for m in modes}
    for path in checkpoints:
        ckpt_paths[read_checkpoint(path).mode] = path
    heads: Dict[str, List[Dict[str, float]]] = {}
    for mode in modes:
        path = ckpt_paths.get(mode)
        if path is None or not path.is_file():
            log.warning("No %s checkpoint; taxonomy and contact accuracy left empty", mode)
            continue
        ckpt = read_checkpoint(path)
        if ckpt.mode != mode:
            raise CheckpointError(f"{path} holds a {ckpt.mode} model, expected {mode}")
        heads[mode] = _head_metrics(ckpt.model, dataset, cfg.eval.contact_threshold)
    guidance = cfg.guidance.to_config()
    config_hash = cfg.config_hash()
    def scene_row(item):
        idx, scene = item
        row = {"scene_id": scene.scene_id, "class_name": scene.class_name, "class_label": scene.class_label,
               "seed": cfg.seed, "config_hash": config_hash}
        for mode in modes:
            rows = generated[mode].get(scene.scene_id)
            if rows is None:
                row.update({f"emd_{mode}": None, f"align_{mode}": None})
            else:
                poses = Pose.from_rows(rows)
                emd = assignment_emd(GraspSet(poses), GraspSet(scene.grasps, "ground-truth"),
                                     cfg.eval.lambda_rot, cfg.eval.subsample_seed)
                row.update({f"emd_{mode}": emd, f"align_{mode}": alignment_fraction(poses.q, guidance)})
            metrics = heads.get(mode, [{}] * len(dataset))[idx]
            row.update({f"ta_{mode}": metrics.get("ta"), f"ca_{mode}": metrics.get("ca")})
        return row
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        rows = list(pool.map(scene_row, enumerate(dataset.scenes)))
    columns = (["scene_id", "class_name", "class_label"] + [f"{k}_{m}" for m in modes for k in ("emd", "ta", "ca")]
               + ["seed", "config_hash"])
    buffer = io.StringIO()
    out = csv.writer(buffer, lineterminator="\n")
    out.writerow(columns)
    for row in rows:
        out.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in columns])
    def table(subset):
        return {
            mode: {key: _summary([r[f"{key}_{mode}"] for r in subset]) for key in ("emd", "ta", "ca", "align")}
            for mode in modes
        }
    by_class = defaultdict(list)
    for row in rows:
        by_class[row["class_name"]].append(row)
    summary = {
        "config_hash": config_hash,
        "seed": cfg.seed,
        "lambda_rot": cfg.eval.lambda_rot,
        "std_over": "scenes",
        "modes": modes,
        "overall": table(rows),
        "per_class": {name: table(subset) for name, subset in sorted(by_class.items())},
    }
    for mode in modes:
        emd = summary["overall"][mode]["emd"]
        if emd["n"]:
            log.info("%s: EMD %.4f ± %.4f over %d scenes", mode, emd["mean"], emd["std"], emd["n"])
    echo_config(cfg, writer)
    writer.write_text(buffer.getvalue(), out_dir / EVAL_SCENES)
    writer.write_json(summary, out_dir / EVAL_SUMMARY)
    log.info("[Written] %s, %s", out_dir / EVAL_SCENES, out_dir / EVAL_SUMMARY)
    return 0
def cmd_icp(cfg: RunConfig, writer: FileWriter, source: Path, target: Path, ray: Sequence[float], output: Optional[Path] = None) -> int:
    """Registers source to target along the ray and writes the JSON result (stdout by default)."""
    src = PointCloud.from_csv(require_file(source, "source cloud").read_text(encoding="utf-8"))
    dst = PointCloud.from_csv(require_file(target, "target cloud").read_text(encoding="utf-8"))
    result = z_only_icp(src, dst, ray, cfg.icp)
    if result.flagged:
        log.warning("ICP found no correspondences; offset left at 0")
    payload = result.to_dict()
    payload.update({"config_hash": cfg.config_hash(), "seed": cfg.seed})
    writer.write_json(payload, output)
    return 0
def cmd_igso3_table(cfg: RunConfig, writer: FileWriter, eps: float, output: Optional[Path] = None) -> int:
    """Writes the tabulated IGSO(3) density, CDF and log-density slope for one concentration."""
    del cfg
    try:
        table = TABLES.get(eps)
    except ValueError as e:
        raise ConfigError([str(e)]) from e
    writer.write_text(dump_table_csv(table), output)
    return 0
