"""Batch experiment runner, ANQ/SR metrics, loss-curve export and frame
ingestion into the VT01 container.

A batch is described by a JSON spec listing videos (path + label, optional
target), an oracle spec, and an attack config. Per-video outcomes land in a
JSON-lines file; the report (ANQ, SR, per-video rows) is always recomputable
from those rows. Videos that fail the attack contribute the full query
budget to ANQ; videos that cannot be attacked at all (unreadable file,
precondition failure) are excluded from the metrics and reported separately.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .attack import AttackConfig, CleanPredictionError, run_attack
from .oracle import Oracle, RemoteOracle, ToyLinearSoftmax, ToyMotionSensitive
from .synth import translating_patch_video
from .tensor import read_vt01, validate_video, write_vt01


@dataclass(frozen=True)
class VideoJob:
    path: str
    label: int
    target: int | None = None


@dataclass
class ExperimentSpec:
    videos: list
    config: AttackConfig
    oracle: str
    out_dir: str
    workers: int = 1
    save_adversarial: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        videos = [
            VideoJob(v["path"], int(v["label"]),
                     int(v["target"]) if v.get("target") is not None else None)
            for v in data.get("videos", [])
        ]
        if not videos:
            raise ValueError("experiment spec lists no videos")
        return cls(
            videos=videos,
            config=AttackConfig.from_dict(data.get("config", {})),
            oracle=data["oracle"],
            out_dir=data.get("out_dir", "."),
            workers=int(data.get("workers", 1)),
            save_adversarial=bool(data.get("save_adversarial", True)),
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class MetricsReport:
    anq: float
    sr: float
    attacked: int
    excluded: int
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "anq": self.anq,
            "sr": self.sr,
            "attacked": self.attacked,
            "excluded": self.excluded,
            "rows": self.rows,
            "config": self.config,
        }


def make_oracle(spec: str, video_shape, num_classes: int = 2) -> Oracle:
    """Build an oracle from its CLI spec string.

    ``toy:linear:SEED`` and ``toy:motion:SEED`` are deterministic built-ins
    sized to the video; anything starting with http(s):// is a remote model
    server.
    """
    if spec.startswith("http://") or spec.startswith("https://"):
        return RemoteOracle(spec)
    parts = spec.split(":")
    if len(parts) == 3 and parts[0] == "toy":
        kind, seed = parts[1], int(parts[2])
        if kind == "linear":
            return ToyLinearSoftmax.from_seed(video_shape, num_classes, seed)
        if kind == "motion":
            v, h, w, c = video_shape
            patch = max(2, min(h, w) // 2)
            dc = 1 if (v - 1) + patch < w else 0
            _, masks = translating_patch_video(
                num_frames=v, height=h, width=w, channels=c,
                patch_size=patch,
                start=((h - patch) // 2, 0),
                velocity=(0, dc),
                seed=seed,
            )
            return ToyMotionSensitive(masks, gain=50.0, channels=c)
    raise ValueError(
        f"unknown oracle spec {spec!r}; expected toy:linear:SEED, "
        "toy:motion:SEED or an http(s) URL"
    )


def compute_metrics(rows: list, budget: int) -> tuple[float, float]:
    """ANQ/SR over attacked rows: failures count the full budget."""
    attacked = [r for r in rows if r.get("error") is None]
    if not attacked:
        raise ValueError("no videos were successfully attacked or failed cleanly")
    per_video = [
        r["queries_used"] if r["success"] else budget for r in attacked
    ]
    anq = float(np.mean(per_video))
    sr = 100.0 * sum(1 for r in attacked if r["success"]) / len(attacked)
    return anq, sr


def _attack_one(job: VideoJob, spec: ExperimentSpec) -> dict:
    row = {
        "path": job.path,
        "label": job.label,
        "target": job.target,
        "error": None,
    }
    try:
        video = validate_video(read_vt01(job.path))
        cfg = spec.config
        if job.target is not None:
            cfg = AttackConfig.from_dict(
                {**cfg.to_dict(), "mode": "targeted", "target": job.target}
            )
        oracle = make_oracle(spec.oracle, video.shape)
        result = run_attack(video, job.label, oracle, cfg)
    except (OSError, ValueError, CleanPredictionError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row.update(
        success=result.success,
        queries_used=result.queries_used,
        metric_queries=result.metric_queries,
        iterations=result.iterations,
        linf=result.linf,
        final_label=result.final_label,
    )
    if spec.save_adversarial:
        stem = os.path.splitext(os.path.basename(job.path))[0]
        adv_path = os.path.join(spec.out_dir, f"{stem}_adv.vt")
        write_vt01(adv_path, result.adversarial)
        row["adversarial_path"] = adv_path
    row["loss_trace"] = [[int(i), float(l)] for i, l in result.loss_trace]
    return row


def run_batch(spec: ExperimentSpec) -> MetricsReport:
    """Attack every video in the spec and write results + report to disk.

    Per-video determinism does not depend on the worker count; each video
    owns its oracle instance and RNG.
    """
    os.makedirs(spec.out_dir, exist_ok=True)
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(lambda j: _attack_one(j, spec), spec.videos))
    else:
        rows = [_attack_one(j, spec) for j in spec.videos]

    results_path = os.path.join(spec.out_dir, "results.jsonl")
    with open(results_path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")

    anq, sr = compute_metrics(rows, spec.config.budget)
    slim_rows = [
        {k: v for k, v in row.items() if k != "loss_trace"} for row in rows
    ]
    report = MetricsReport(
        anq=anq,
        sr=sr,
        attacked=sum(1 for r in rows if r["error"] is None),
        excluded=sum(1 for r in rows if r["error"] is not None),
        rows=slim_rows,
        config=spec.config.to_dict(),
    )
    with open(os.path.join(spec.out_dir, "report.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    return report


LOSS_CURVE_HEADER = "strategy,iteration,loss"


def export_loss_curves(curves: dict) -> str:
    """Render {strategy: [(iteration, loss), ...]} as CSV text.

    Floats are written with repr precision so parse(export(x)) == x.
    """
    lines = [LOSS_CURVE_HEADER]
    for strategy in curves:
        for iteration, loss in curves[strategy]:
            lines.append(f"{strategy},{int(iteration)},{float(loss)!r}")
    return "\n".join(lines) + "\n"


def parse_loss_curves(text: str) -> dict:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != LOSS_CURVE_HEADER:
        raise ValueError(f"bad loss-curve header: {lines[:1]}")
    curves: dict = {}
    for ln in lines[1:]:
        strategy, iteration, loss = ln.split(",")
        curves.setdefault(strategy, []).append((int(iteration), float(loss)))
    return curves


def _read_pnm(path) -> np.ndarray:
    """Minimal PGM (P2/P5) and PPM (P3/P6) reader, scaled to [0, 1] floats
    with shape (H, W, 3); grayscale is replicated across channels."""
    with open(path, "rb") as fh:
        blob = fh.read()

    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(blob):
        if blob[i : i + 1] == b"#":
            while i < len(blob) and blob[i] not in b"\r\n":
                i += 1
        elif blob[i : i + 1].isspace():
            i += 1
        else:
            j = i
            while j < len(blob) and not blob[j : j + 1].isspace():
                j += 1
            tokens.append(blob[i:j])
            i = j
    if len(tokens) < 4:
        raise ValueError(f"{path}: truncated PNM header")
    magic = tokens[0].decode("ascii", "replace")
    if magic not in ("P2", "P3", "P5", "P6"):
        raise ValueError(f"{path}: unsupported format {magic!r}")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval <= 0:
        raise ValueError(f"{path}: bad maxval {maxval}")
    channels = 3 if magic in ("P3", "P6") else 1

    if magic in ("P2", "P3"):
        values = np.array(blob[i:].split(), dtype=np.float64)
    else:
        i += 1  # single whitespace byte after maxval
        if maxval < 256:
            values = np.frombuffer(blob, dtype=np.uint8, offset=i).astype(np.float64)
        else:
            values = np.frombuffer(blob, dtype=">u2", offset=i).astype(np.float64)
    need = width * height * channels
    if values.size < need:
        raise ValueError(f"{path}: payload has {values.size} samples, need {need}")
    img = values[:need].reshape(height, width, channels) / maxval
    if channels == 1:
        img = np.repeat(img, 3, axis=2)
    return img


def ingest_frames(sources, out_path) -> np.ndarray:
    """Assemble a VT01 video from image frames or validate an existing one.

    ``sources`` is either a directory (frames taken in lexicographic order),
    a list of frame paths, or a single VT01 file which is validated and
    copied through. Frames must share dimensions. Returns the video array.
    """
    if isinstance(sources, (str, os.PathLike)):
        if os.path.isdir(sources):
            names = sorted(os.listdir(sources))
            paths = [os.path.join(sources, n) for n in names]
        else:
            paths = [os.fspath(sources)]
    else:
        paths = [os.fspath(p) for p in sources]
    paths = [p for p in paths if not os.path.isdir(p)]
    if not paths:
        raise ValueError("no input frames found")

    if len(paths) == 1 and paths[0].endswith((".vt", ".vt01")):
        video = validate_video(read_vt01(paths[0]))
        write_vt01(out_path, video)
        return video

    frames = []
    for p in paths:
        img = _read_pnm(p)
        if frames and img.shape != frames[0].shape:
            raise ValueError(
                f"{p}: frame shape {img.shape} differs from {frames[0].shape}"
            )
        frames.append(img)
    video = validate_video(np.stack(frames, axis=0))
    write_vt01(out_path, video)
    return video
