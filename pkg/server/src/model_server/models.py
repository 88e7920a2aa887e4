"""Models the server can expose.

Every served model answers ``logits(video)`` for a float video shaped
(frames, height, width, channels) with values in [0, 1]; normalization and
any layout shuffling the underlying network needs happen here, server-side,
so clients always work in raw pixel space.
"""

from __future__ import annotations

import numpy as np


class ServedModel:
    """Contract: stable ``model_id``, fixed ``num_classes``, optional
    ``expected_shape``, deterministic ``logits`` in eval mode."""

    model_id = "base"
    num_classes = 0
    expected_shape: tuple | None = None

    def logits(self, video: np.ndarray) -> list[float]:
        raise NotImplementedError

    def info(self) -> dict:
        return {
            "model_id": self.model_id,
            "num_classes": self.num_classes,
            "expected_shape": list(self.expected_shape) if self.expected_shape else None,
        }


class EchoModel(ServedModel):
    """Loopback model returning a configured logits vector verbatim."""

    def __init__(self, logits, expected_shape=None, model_id: str = "echo"):
        logits = [float(v) for v in logits]
        if not logits:
            raise ValueError("echo model needs at least one logit")
        self._logits = logits
        self.model_id = model_id
        self.num_classes = len(logits)
        self.expected_shape = tuple(expected_shape) if expected_shape else None

    def logits(self, video: np.ndarray) -> list[float]:
        return list(self._logits)


class SeededLinearModel(ServedModel):
    """Deterministic linear classifier for integration runs; weights come
    from the seed so any two servers with the same config agree exactly."""

    def __init__(self, expected_shape, num_classes: int = 2, seed: int = 0,
                 scale: float = 1.0, model_id: str | None = None):
        self.expected_shape = tuple(int(s) for s in expected_shape)
        self.num_classes = int(num_classes)
        dim = int(np.prod(self.expected_shape))
        rng = np.random.default_rng(seed)
        self._weights = rng.normal(0.0, scale / np.sqrt(dim), (self.num_classes, dim))
        self._bias = rng.normal(0.0, 0.01, self.num_classes)
        self.model_id = model_id or f"linear-s{seed}"

    def logits(self, video: np.ndarray) -> list[float]:
        out = self._weights @ video.astype(np.float64).ravel() + self._bias
        return [float(v) for v in out]


# Kinetics-400 statistics used by the torchvision video models
KINETICS_MEAN = (0.43216, 0.394666, 0.37645)
KINETICS_STD = (0.22803, 0.22145, 0.216989)


class TorchvisionVideoModel(ServedModel):
    """Pretrained action-recognition network served in eval mode.

    Videos arrive as (T, H, W, C) in [0, 1]; mean/std normalization and the
    (C, T, H, W) layout the network wants are applied here. Requires torch
    and torchvision with downloadable weights.
    """

    def __init__(self, name: str = "r3d_18", device: str = "cpu",
                 expected_shape=None, mean=KINETICS_MEAN, std=KINETICS_STD):
        import torch
        from torchvision.models import video as tv_video

        builders = {
            "r3d_18": (tv_video.r3d_18, "R3D_18_Weights"),
            "mc3_18": (tv_video.mc3_18, "MC3_18_Weights"),
            "r2plus1d_18": (tv_video.r2plus1d_18, "R2Plus1D_18_Weights"),
        }
        if name not in builders:
            raise ValueError(f"unknown torchvision video model {name!r}")
        builder, weights_attr = builders[name]
        weights = getattr(tv_video, weights_attr).DEFAULT
        self._torch = torch
        self._net = builder(weights=weights).to(device).eval()
        self._device = device
        self._mean = np.asarray(mean, dtype=np.float64)
        self._std = np.asarray(std, dtype=np.float64)
        self.model_id = f"torchvision:{name}"
        self.num_classes = 400
        self.expected_shape = tuple(expected_shape) if expected_shape else None

    def logits(self, video: np.ndarray) -> list[float]:
        normalized = (video - self._mean) / self._std
        clip = np.transpose(normalized, (3, 0, 1, 2))[None]  # 1,C,T,H,W
        with self._torch.no_grad():
            tensor = self._torch.as_tensor(clip, dtype=self._torch.float32,
                                           device=self._device)
            out = self._net(tensor)[0].cpu().numpy()
        return [float(v) for v in out]


def build_model(config: dict) -> ServedModel:
    """Instantiate the model described by the config's ``model`` section."""
    kind = config.get("type")
    if kind == "echo":
        return EchoModel(
            config.get("logits", []),
            expected_shape=config.get("expected_shape"),
            model_id=config.get("model_id", "echo"),
        )
    if kind == "linear":
        return SeededLinearModel(
            config["expected_shape"],
            num_classes=config.get("num_classes", 2),
            seed=config.get("seed", 0),
            scale=config.get("scale", 1.0),
            model_id=config.get("model_id"),
        )
    if kind == "torchvision":
        return TorchvisionVideoModel(
            name=config.get("name", "r3d_18"),
            device=config.get("device", "cpu"),
            expected_shape=config.get("expected_shape"),
            mean=config.get("mean", KINETICS_MEAN),
            std=config.get("std", KINETICS_STD),
        )
    raise ValueError(f"unknown model type {kind!r}")
