"""Two-stream classification network with pointwise-convolution fusion.

A spatial stream consumes the chunk's center RGB frame and a temporal stream
consumes the stacked 2L-channel flow. Feature maps taken after the final
convolutional activation of each stream are concatenated channel-wise
(spatial first) and mixed back to D channels by a 1x1 convolution; global
average pooling and a fully connected layer produce per-chunk softmax scores,
and video scores are the arithmetic mean over chunks.

Backbones: `pretrained_resnet50` for production and `tiny_test_cnn`, a small
4-layer CNN, so the test suite never needs downloaded weights. Single-stream
ablation modes bypass fusion with one stream's pooled features.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from gmsnet.chunker import TemporalChunk
from gmsnet.core.errors import DataError
from gmsnet.core.types import CLASS_ORDER, NUM_CLASSES, GmsLabel, PipelineConfig

BACKBONE_KINDS = ("pretrained_resnet50", "tiny_test_cnn")
MODES = ("two_stream", "spatial_only", "temporal_only")

_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class BackboneSpec:
    kind: str
    in_channels: int
    out_channels: int


@dataclass
class PredictionScore:
    """Softmax score vector over (WM, FM, PR)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (NUM_CLASSES,):
            raise DataError(f"score vector must have shape ({NUM_CLASSES},), got {p.shape}")
        if p.min() < -1e-6 or abs(p.sum() - 1.0) > 1e-6:
            raise DataError(f"scores must be a probability vector, got {p}")
        self.probs = p

    def argmax_label(self) -> GmsLabel:
        # np.argmax returns the first maximum, which implements the
        # WM < FM < PR tie-break.
        return CLASS_ORDER[int(np.argmax(self.probs))]


class TinyBackbone(nn.Module):
    """Four stride-2 conv layers ending in D=32 channels; hermetic test CNN."""

    kind = "tiny_test_cnn"
    out_channels = 32

    def __init__(self, in_channels: int = 3):
        super().__init__()
        widths = (16, 24, 32, 32)
        layers: list[nn.Module] = []
        prev = in_channels
        for w in widths:
            layers.append(nn.Conv2d(prev, w, kernel_size=3, stride=2, padding=1))
            layers.append(nn.ReLU(inplace=True))
            prev = w
        self.features = nn.Sequential(*layers)
        self.spec = BackboneSpec(self.kind, in_channels, self.out_channels)

    @property
    def first_conv(self) -> nn.Conv2d:
        return self.features[0]

    def replace_first_conv(self, conv: nn.Conv2d) -> None:
        self.features[0] = conv
        self.spec.in_channels = conv.in_channels

    @property
    def cam_layer(self) -> nn.Module:
        """Module emitting the final convolutional activation."""
        return self.features[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(x)


class ResNet50Backbone(nn.Module):
    """ResNet-50 trunk up to the last residual stage (post-activation)."""

    kind = "pretrained_resnet50"
    out_channels = 2048

    def __init__(self, in_channels: int = 3, pretrained: bool = False):
        super().__init__()
        from torchvision.models import resnet50

        weights = None
        if pretrained:
            from torchvision.models import ResNet50_Weights

            weights = ResNet50_Weights.IMAGENET1K_V1
        net = resnet50(weights=weights)
        self.conv1 = net.conv1
        self.bn1 = net.bn1
        self.relu = net.relu
        self.maxpool = net.maxpool
        self.layer1 = net.layer1
        self.layer2 = net.layer2
        self.layer3 = net.layer3
        self.layer4 = net.layer4
        self.spec = BackboneSpec(self.kind, in_channels, self.out_channels)
        if in_channels != 3:
            adapt_first_layer(self, in_channels)

    @property
    def first_conv(self) -> nn.Conv2d:
        return self.conv1

    def replace_first_conv(self, conv: nn.Conv2d) -> None:
        self.conv1 = conv
        self.spec.in_channels = conv.in_channels

    @property
    def cam_layer(self) -> nn.Module:
        return self.layer4

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.maxpool(self.relu(self.bn1(self.conv1(x))))
        x = self.layer1(x)
        x = self.layer2(x)
        x = self.layer3(x)
        return self.layer4(x)


def make_backbone(kind: str, in_channels: int = 3, pretrained: bool = False) -> nn.Module:
    if kind == "tiny_test_cnn":
        backbone = TinyBackbone(3)
    elif kind == "pretrained_resnet50":
        backbone = ResNet50Backbone(3, pretrained=pretrained)
    else:
        raise DataError(f"unknown backbone kind {kind!r}")
    if in_channels != 3:
        adapt_first_layer(backbone, in_channels)
    return backbone


def adapt_first_layer(backbone: nn.Module, in_channels: int) -> nn.Module:
    """Rebuild the first conv for a new channel count.

    Every new input channel receives the mean of the three original kernels
    scaled by 3 / in_channels, which preserves the pre-activation response to
    a constant input; all other weights are untouched.
    """
    if in_channels < 1:
        raise DataError(f"in_channels must be >= 1, got {in_channels}")
    old = backbone.first_conv
    if old.in_channels != 3:
        raise DataError(f"first layer expects 3 input channels, found {old.in_channels}")
    new = nn.Conv2d(
        in_channels,
        old.out_channels,
        kernel_size=old.kernel_size,
        stride=old.stride,
        padding=old.padding,
        dilation=old.dilation,
        bias=old.bias is not None,
    )
    with torch.no_grad():
        mean_kernel = old.weight.mean(dim=1, keepdim=True)  # (out, 1, kh, kw)
        new.weight.copy_(mean_kernel.expand(-1, in_channels, -1, -1) * (3.0 / in_channels))
        if old.bias is not None:
            new.bias.copy_(old.bias)
    backbone.replace_first_conv(new)
    return backbone


class FusionLayer(nn.Conv2d):
    """Pointwise convolution mixing concatenated 2D-channel features to D.

    Initialized near the average of the two streams: each half of the filter
    bank starts at identity/2 plus small noise, biases at zero.
    """

    def __init__(self, channels: int, noise_std: float = 1e-3):
        super().__init__(2 * channels, channels, kernel_size=1, bias=True)
        with torch.no_grad():
            eye = torch.eye(channels).reshape(channels, channels, 1, 1)
            base = torch.cat([eye, eye], dim=1) * 0.5
            self.weight.copy_(base + noise_std * torch.randn_like(self.weight))
            self.bias.zero_()


def fuse(y_s: torch.Tensor, y_t: torch.Tensor, layer: nn.Conv2d) -> torch.Tensor:
    """Concatenate stream feature maps (spatial first) and mix pointwise."""
    if y_s.shape != y_t.shape:
        raise DataError(f"stream feature shapes differ: {tuple(y_s.shape)} vs {tuple(y_t.shape)}")
    return layer(torch.cat([y_s, y_t], dim=1))


class TwoStreamClassifier(nn.Module):
    """Spatial + temporal streams, conv fusion, GAP, and a linear head."""

    def __init__(
        self,
        backbone_kind: str = "tiny_test_cnn",
        chunk_length: int = 30,
        mode: str = "two_stream",
        pretrained: bool = False,
    ):
        super().__init__()
        if backbone_kind not in BACKBONE_KINDS:
            raise DataError(f"unknown backbone kind {backbone_kind!r}")
        if mode not in MODES:
            raise DataError(f"unknown mode {mode!r}")
        self.backbone_kind = backbone_kind
        self.chunk_length = chunk_length
        self.mode = mode
        self.spatial = make_backbone(backbone_kind, 3, pretrained=pretrained)
        self.temporal = make_backbone(backbone_kind, 2 * chunk_length, pretrained=pretrained)
        channels = self.spatial.out_channels
        self.fusion = FusionLayer(channels)
        self.head = nn.Linear(channels, NUM_CLASSES)

        if backbone_kind == "pretrained_resnet50":
            mean, std = _IMAGENET_MEAN, _IMAGENET_STD
        else:
            mean, std = (0.5, 0.5, 0.5), (0.5, 0.5, 0.5)
        self.register_buffer("input_mean", torch.tensor(mean).view(1, 3, 1, 1))
        self.register_buffer("input_std", torch.tensor(std).view(1, 3, 1, 1))

    def forward(self, x_s: torch.Tensor, x_t: torch.Tensor) -> torch.Tensor:
        """x_s: (B, 3, H, W) in [0, 1]; x_t: (B, 2L, H, W) in [-1, 1]. Returns logits."""
        if x_t.shape[1] != 2 * self.chunk_length:
            raise DataError(
                f"temporal input has {x_t.shape[1]} channels, model expects {2 * self.chunk_length}"
            )
        if self.mode == "spatial_only":
            feat = self.spatial((x_s - self.input_mean) / self.input_std)
        elif self.mode == "temporal_only":
            feat = self.temporal(x_t)
        else:
            y_s = self.spatial((x_s - self.input_mean) / self.input_std)
            y_t = self.temporal(x_t)
            feat = fuse(y_s, y_t, self.fusion)
        pooled = feat.mean(dim=(2, 3))
        return self.head(pooled)


def chunk_to_tensors(chunk: TemporalChunk) -> tuple[torch.Tensor, torch.Tensor]:
    """Convert a chunk to model inputs (without batch dimension)."""
    x_s = torch.from_numpy(np.ascontiguousarray(chunk.x_s)).permute(2, 0, 1).float() / 255.0
    x_t = torch.from_numpy(np.ascontiguousarray(chunk.x_t)).float()
    return x_s, x_t


def classify_chunk(chunk: TemporalChunk, model: TwoStreamClassifier) -> PredictionScore:
    """Deterministic per-chunk softmax scores (eval mode, no grad)."""
    model.eval()
    x_s, x_t = chunk_to_tensors(chunk)
    with torch.no_grad():
        logits = model(x_s.unsqueeze(0), x_t.unsqueeze(0))
        probs = torch.softmax(logits, dim=1).squeeze(0).numpy()
    return PredictionScore(probs=probs.astype(np.float64))


def classify_video(
    chunks: list[TemporalChunk], model: TwoStreamClassifier
) -> tuple[PredictionScore, GmsLabel]:
    """Video score = arithmetic mean of chunk scores; label = argmax with
    WM < FM < PR tie-break."""
    if not chunks:
        raise DataError("classify_video requires at least one chunk")
    scores = np.stack([classify_chunk(c, model).probs for c in chunks])
    mean_score = PredictionScore(probs=scores.mean(axis=0))
    return mean_score, mean_score.argmax_label()


def save_checkpoint(
    model: TwoStreamClassifier, path: str | Path, config: PipelineConfig
) -> None:
    """Serialize weights with the config hash and class-order metadata."""
    payload = {
        "state_dict": model.state_dict(),
        "backbone_kind": model.backbone_kind,
        "chunk_length": model.chunk_length,
        "mode": model.mode,
        "class_order": [c.value for c in CLASS_ORDER],
        "config_hash": config.full_hash(),
    }
    torch.save(payload, str(path))


def load_checkpoint(
    path: str | Path, config: PipelineConfig | None = None
) -> tuple[TwoStreamClassifier, dict]:
    """Rebuild a model from a checkpoint; refuses a chunk-length mismatch."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    payload = torch.load(str(path), map_location="cpu", weights_only=False)
    if config is not None and payload["chunk_length"] != config.chunk_length:
        raise DataError(
            f"checkpoint chunk_length {payload['chunk_length']} != configured "
            f"{config.chunk_length}"
        )
    if payload["class_order"] != [c.value for c in CLASS_ORDER]:
        raise DataError(f"checkpoint class order {payload['class_order']} unsupported")
    model = TwoStreamClassifier(
        backbone_kind=payload["backbone_kind"],
        chunk_length=payload["chunk_length"],
        mode=payload["mode"],
    )
    model.load_state_dict(payload["state_dict"])
    model.eval()
    meta = {k: v for k, v in payload.items() if k != "state_dict"}
    return model, meta
