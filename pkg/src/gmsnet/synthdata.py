"""Deterministic synthetic "infant" videos with class-conditioned motion.

Renders an articulated figure (ellipse torso, head, four two-segment limbs)
over a plain or cluttered static background, with per-class motion profiles:

* WM_like: large, slow elliptical limb trajectories.
* FM_like: small, fast, jittery multidirectional trajectories.
* PR_like: one low-variability trajectory repeated identically by all limbs.

These are caricatures keyed to qualitative movement descriptions, not
clinical simulations; their only job is to give the pipeline separable,
fully-known test data. Every clip comes with ground truth produced by the
same rasterizer: per-frame segmentation masks, the four body joints
(shoulders and hips), per-limb skeleton points, and the injected global
transform. Small color markers are baked into the body at the joints so a
pose backend can recover them in any geometrically transformed frame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from gmsnet.core.errors import DataError
from gmsnet.core.manifest import save_manifest
from gmsnet.core.types import DatasetManifest, GmsLabel, ManifestEntry, VideoClip
from gmsnet.core.video import save_image_sequence

PROFILES = ("WM_like", "FM_like", "PR_like")

PROFILE_TO_LABEL = {
    "WM_like": GmsLabel.WM,
    "FM_like": GmsLabel.FM,
    "PR_like": GmsLabel.PR,
}

# Motion parameter ranges per class profile: displacement amplitude (px) and
# temporal frequency (Hz). Pairwise distinct by construction.
MOTION_RANGES = {
    "WM_like": {"amp": (25.0, 40.0), "freq": (0.2, 0.5)},
    "FM_like": {"amp": (3.0, 8.0), "freq": (1.5, 2.8)},
    "PR_like": {"amp": (10.0, 15.0), "freq": (0.8, 0.8)},
}

# RGB palette. Marker hues are far from every body/background color so that
# marker detection survives bilinear interpolation blending.
BODY_COLOR = (221, 178, 160)
LIMB_COLOR = (203, 156, 143)
HEAD_COLOR = (214, 170, 152)
PLAIN_BG = (40, 42, 48)
BED_FRAME_COLOR = (122, 96, 70)

JOINT_NAMES = ("left_shoulder", "right_shoulder", "left_hip", "right_hip")
MARKER_COLORS = {
    "left_shoulder": (255, 0, 0),
    "right_shoulder": (0, 200, 0),
    "left_hip": (0, 90, 255),
    "right_hip": (255, 220, 0),
}

LIMB_NAMES = ("left_arm", "right_arm", "left_leg", "right_leg")

# Rest-pose geometry in body coordinates (x right, y down, unit = body_scale px).
_TORSO_AXES = (20.0, 34.0)
_HEAD_CENTER = (0.0, -46.0)
_HEAD_RADIUS = 13.0
_SHOULDERS = {"left": (-12.0, -22.0), "right": (12.0, -22.0)}
_HIPS = {"left": (-10.0, 24.0), "right": (10.0, 24.0)}
_LIMB_REST = {
    # anchor joint name, rest elbow/knee, rest tip
    "left_arm": ("left_shoulder", (-32.0, -18.0), (-46.0, -4.0)),
    "right_arm": ("right_shoulder", (32.0, -18.0), (46.0, -4.0)),
    "left_leg": ("left_hip", (-22.0, 46.0), (-30.0, 64.0)),
    "right_leg": ("right_hip", (22.0, 46.0), (30.0, 64.0)),
}


@dataclass
class SynthSpec:
    """Full description of one synthetic clip; output is deterministic in it."""

    class_profile: str = "WM_like"
    duration_s: float = 10.0
    fps: float = 6.0
    canvas_size: int = 288
    body_scale: float = 1.5
    rotation_deg: float = 0.0
    scale: float = 1.0
    translation: tuple[float, float] = (0.0, 0.0)
    background: str = "plain"
    seed: int = 0
    moving_limbs: tuple[int, ...] | None = None  # None = all four limbs move

    def __post_init__(self) -> None:
        if self.class_profile not in PROFILES:
            raise DataError(f"unknown class profile {self.class_profile!r}")
        if self.background not in ("plain", "clutter"):
            raise DataError(f"unknown background {self.background!r}")
        if self.duration_s <= 0 or self.fps <= 0:
            raise DataError("duration_s and fps must be positive")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration_s * self.fps))


@dataclass
class GroundTruth:
    """Per-frame truth consistent with the rendered frames by construction."""

    masks: np.ndarray  # (T, H, W) uint8, 0 or 255
    joints: np.ndarray  # (T, 4, 2) float, canvas coords, order = JOINT_NAMES
    limb_points: np.ndarray  # (T, 4, 3, 2) float: anchor, mid, tip per limb
    transform: dict  # rotation_deg, scale, translation, body_scale, sizes
    fps: float
    profile: str
    limb_thickness: float = 0.0
    marker_radius: float = 0.0

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        mask_dir = directory / "masks"
        mask_dir.mkdir(parents=True, exist_ok=True)
        for t in range(self.masks.shape[0]):
            if not cv2.imwrite(str(mask_dir / f"{t:05d}.png"), self.masks[t]):
                raise DataError(f"failed to write mask {t} under {mask_dir}")
        payload = {
            "fps": self.fps,
            "profile": self.profile,
            "transform": self.transform,
            "limb_thickness": self.limb_thickness,
            "marker_radius": self.marker_radius,
            "joint_names": list(JOINT_NAMES),
            "limb_names": list(LIMB_NAMES),
            "joints": self.joints.tolist(),
            "limb_points": self.limb_points.tolist(),
        }
        with open(directory / "truth.json", "w") as f:
            json.dump(payload, f, sort_keys=True)

    @classmethod
    def load(cls, directory: str | Path) -> "GroundTruth":
        directory = Path(directory)
        with open(directory / "truth.json") as f:
            payload = json.load(f)
        joints = np.asarray(payload["joints"], dtype=np.float64)
        n = joints.shape[0]
        masks = []
        for t in range(n):
            m = cv2.imread(str(directory / "masks" / f"{t:05d}.png"), cv2.IMREAD_GRAYSCALE)
            if m is None:
                raise DataError(f"missing ground-truth mask {t} under {directory}")
            masks.append(m)
        return cls(
            masks=np.stack(masks),
            joints=joints,
            limb_points=np.asarray(payload["limb_points"], dtype=np.float64),
            transform=payload["transform"],
            fps=float(payload["fps"]),
            profile=payload["profile"],
            limb_thickness=float(payload["limb_thickness"]),
            marker_radius=float(payload["marker_radius"]),
        )


def _placement_matrix(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Map body coordinates to canvas: q = center + translation + s*Rg(g) @ p.

    Rg is chosen so that the rendered body axis measures `rotation_deg` under
    the body-axis angle convention (0 = image-down, positive toward image-right).
    """
    g = math.radians(spec.rotation_deg)
    s = spec.scale * spec.body_scale
    rot = np.array([[math.cos(g), math.sin(g)], [-math.sin(g), math.cos(g)]])
    a = s * rot
    c = spec.canvas_size / 2.0
    offset = np.array([c + spec.translation[0], c + spec.translation[1]])
    return a, offset


def _limb_displacements(spec: SynthSpec, rng: np.random.Generator) -> list:
    """One displacement function per limb: t_seconds -> (dx, dy) in body px."""
    amp_lo, amp_hi = MOTION_RANGES[spec.class_profile]["amp"]
    f_lo, f_hi = MOTION_RANGES[spec.class_profile]["freq"]
    moving = set(range(4)) if spec.moving_limbs is None else set(spec.moving_limbs)
    funcs = []

    if spec.class_profile == "PR_like":
        # One waveform shared by every limb: same amplitude, fixed frequency,
        # zero phase jitter, directed along each limb's rest axis.
        amp = rng.uniform(amp_lo, amp_hi)
        freq = f_lo
        for i, name in enumerate(LIMB_NAMES):
            anchor_name, _, tip = _LIMB_REST[name]
            anchor = _joint_rest(anchor_name)
            d = np.array(tip) - np.array(anchor)
            u = d / np.linalg.norm(d)
            if i not in moving:
                funcs.append(lambda t: (0.0, 0.0))
                continue
            funcs.append(
                lambda t, amp=amp, freq=freq, u=u: tuple(amp * math.sin(2 * math.pi * freq * t) * u)
            )
        return funcs

    for i in range(4):
        if spec.class_profile == "WM_like":
            ax = rng.uniform(amp_lo, amp_hi)
            ay = rng.uniform(amp_lo, amp_hi)
            freq = rng.uniform(f_lo, f_hi)
            phase = rng.uniform(0, 2 * math.pi)
            fn = lambda t, ax=ax, ay=ay, freq=freq, phase=phase: (
                ax * math.cos(2 * math.pi * freq * t + phase),
                ay * math.sin(2 * math.pi * freq * t + phase),
            )
        else:  # FM_like: sum of three fast components in random directions
            total = rng.uniform(amp_lo, amp_hi)
            weights = rng.uniform(0.5, 1.0, size=3)
            weights = weights / weights.sum() * total
            comps = []
            for a in weights:
                f = rng.uniform(f_lo, f_hi)
                phase = rng.uniform(0, 2 * math.pi)
                ang = rng.uniform(0, 2 * math.pi)
                comps.append((a, f, phase, math.cos(ang), math.sin(ang)))

            def fn(t, comps=tuple(comps)):
                x = 0.0
                y = 0.0
                for a, f, phase, cx, cy in comps:
                    v = a * math.sin(2 * math.pi * f * t + phase)
                    x += v * cx
                    y += v * cy
                return (x, y)

        if i not in moving:
            fn = lambda t: (0.0, 0.0)
        funcs.append(fn)
    return funcs


def _joint_rest(name: str) -> tuple[float, float]:
    side, kind = name.split("_")
    return _SHOULDERS[side] if kind == "shoulder" else _HIPS[side]


def _render_background(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    size = spec.canvas_size
    bg = np.empty((size, size, 3), dtype=np.uint8)
    bg[:] = PLAIN_BG
    if spec.background == "clutter":
        yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
        wrinkle = np.zeros((size, size))
        for _ in range(3):
            fx = rng.uniform(0.01, 0.05)
            fy = rng.uniform(0.01, 0.05)
            phase = rng.uniform(0, 2 * math.pi)
            wrinkle += rng.uniform(3, 7) * np.sin(2 * math.pi * (fx * xx + fy * yy) + phase)
        bg = np.clip(bg.astype(np.float64) + wrinkle[..., None], 0, 255).astype(np.uint8)
        inset = max(4, size // 48)
        thickness = max(6, size // 24)
        cv2.rectangle(
            bg,
            (inset, inset),
            (size - 1 - inset, size - 1 - inset),
            BED_FRAME_COLOR,
            thickness=thickness,
        )
    return bg


def _draw_body(
    canvas: np.ndarray,
    joints: np.ndarray,
    limb_points: np.ndarray,
    angle_deg: float,
    torso_center: np.ndarray,
    head_center: np.ndarray,
    scale: float,
    limb_thickness: int,
    marker_radius: int,
    mask_only: bool,
) -> None:
    """Shared rasterizer for the color frame and the silhouette mask."""
    white = (255,)
    torso_axes = (int(round(_TORSO_AXES[0] * scale)), int(round(_TORSO_AXES[1] * scale)))
    torso_color = white if mask_only else BODY_COLOR
    cv2.ellipse(
        canvas,
        (int(round(torso_center[0])), int(round(torso_center[1]))),
        torso_axes,
        -angle_deg,
        0,
        360,
        torso_color,
        thickness=-1,
    )
    head_color = white if mask_only else HEAD_COLOR
    cv2.circle(
        canvas,
        (int(round(head_center[0])), int(round(head_center[1]))),
        int(round(_HEAD_RADIUS * scale)),
        head_color,
        thickness=-1,
    )
    limb_color = white if mask_only else LIMB_COLOR
    for li in range(4):
        pts = limb_points[li]
        for a, b in ((pts[0], pts[1]), (pts[1], pts[2])):
            cv2.line(
                canvas,
                (int(round(a[0])), int(round(a[1]))),
                (int(round(b[0])), int(round(b[1]))),
                limb_color,
                thickness=limb_thickness,
                lineType=cv2.LINE_8,
            )
        # Rounded joints.
        for p in pts:
            cv2.circle(
                canvas,
                (int(round(p[0])), int(round(p[1]))),
                limb_thickness // 2,
                limb_color,
                thickness=-1,
            )
    # Joint pads keep the markers strictly inside the silhouette.
    pad_color = white if mask_only else BODY_COLOR
    for j in range(4):
        cv2.circle(
            canvas,
            (int(round(joints[j, 0])), int(round(joints[j, 1]))),
            marker_radius + 3,
            pad_color,
            thickness=-1,
        )
    if not mask_only:
        for j, name in enumerate(JOINT_NAMES):
            cv2.circle(
                canvas,
                (int(round(joints[j, 0])), int(round(joints[j, 1]))),
                marker_radius,
                MARKER_COLORS[name],
                thickness=-1,
            )


def generate(spec: SynthSpec) -> tuple[VideoClip, GroundTruth]:
    """Render one clip and its ground truth; bit-identical for a fixed spec."""
    rng = np.random.default_rng(spec.seed)
    a, offset = _placement_matrix(spec)
    total_scale = spec.scale * spec.body_scale
    limb_thickness = max(3, int(round(7 * total_scale)))
    marker_radius = max(3, int(round(4.5 * total_scale)))

    background = _render_background(spec, rng)
    disp_funcs = _limb_displacements(spec, rng)

    n = spec.n_frames
    size = spec.canvas_size
    frames = np.empty((n, size, size, 3), dtype=np.uint8)
    masks = np.zeros((n, size, size), dtype=np.uint8)
    joints_all = np.empty((n, 4, 2))
    limbs_all = np.empty((n, 4, 3, 2))

    joint_rest = np.array([_joint_rest(name) for name in JOINT_NAMES])
    torso_center = a @ np.zeros(2) + offset
    head_center = a @ np.array(_HEAD_CENTER) + offset

    for t in range(n):
        ts = t / spec.fps
        joints_canvas = joint_rest @ a.T + offset
        limb_pts = np.empty((4, 3, 2))
        for li, name in enumerate(LIMB_NAMES):
            anchor_name, _, tip_rest = _LIMB_REST[name]
            anchor = np.array(_joint_rest(anchor_name))
            dx, dy = disp_funcs[li](ts)
            tip = np.array(tip_rest) + np.array([dx, dy])
            d = tip - anchor
            norm = np.linalg.norm(d)
            perp = np.array([-d[1], d[0]]) / norm if norm > 0 else np.zeros(2)
            side = -1.0 if name.startswith("left") else 1.0
            mid = anchor + 0.5 * d + 0.2 * norm * side * perp
            for pi, p in enumerate((anchor, mid, tip)):
                limb_pts[li, pi] = a @ p + offset

        frame = background.copy()
        _draw_body(
            frame,
            joints_canvas,
            limb_pts,
            spec.rotation_deg,
            torso_center,
            head_center,
            total_scale,
            limb_thickness,
            marker_radius,
            mask_only=False,
        )
        mask = masks[t]
        _draw_body(
            mask,
            joints_canvas,
            limb_pts,
            spec.rotation_deg,
            torso_center,
            head_center,
            total_scale,
            limb_thickness,
            marker_radius,
            mask_only=True,
        )
        frames[t] = frame
        joints_all[t] = joints_canvas
        limbs_all[t] = limb_pts

    clip = VideoClip(frames=frames, fps=spec.fps)
    gt = GroundTruth(
        masks=masks,
        joints=joints_all,
        limb_points=limbs_all,
        transform={
            "rotation_deg": spec.rotation_deg,
            "scale": spec.scale,
            "translation": list(spec.translation),
            "body_scale": spec.body_scale,
            "canvas_size": spec.canvas_size,
        },
        fps=spec.fps,
        profile=spec.class_profile,
        limb_thickness=float(limb_thickness),
        marker_radius=float(marker_radius),
    )
    return clip, gt


def limb_region_mask(
    gt: GroundTruth,
    limb_index: int,
    frame_indices: range | list[int],
    shape: tuple[int, int],
    affine: np.ndarray | None = None,
    dilation: int = 0,
) -> np.ndarray:
    """Union of one limb's capsule over a frame range, optionally mapped by a
    2x3 affine into another coordinate frame (e.g. the adjusted output).
    Returns a boolean mask of `shape`."""
    mask = np.zeros(shape, dtype=np.uint8)
    thickness = gt.limb_thickness
    if affine is not None:
        det = abs(np.linalg.det(np.asarray(affine)[:, :2]))
        thickness = thickness * math.sqrt(det)
    thickness = max(1, int(round(thickness)))
    for t in frame_indices:
        pts = gt.limb_points[t, limb_index]
        if affine is not None:
            ones = np.ones((pts.shape[0], 1))
            pts = np.hstack([pts, ones]) @ np.asarray(affine).T
        for a, b in ((pts[0], pts[1]), (pts[1], pts[2])):
            cv2.line(
                mask,
                (int(round(a[0])), int(round(a[1]))),
                (int(round(b[0])), int(round(b[1]))),
                (255,),
                thickness=thickness,
            )
    if dilation > 0:
        kernel = np.ones((2 * dilation + 1, 2 * dilation + 1), dtype=np.uint8)
        mask = cv2.dilate(mask, kernel)
    return mask > 0


def generate_dataset(
    out_dir: str | Path,
    n_per_class: int,
    seed: int = 0,
    duration_s: float = 10.0,
    fps: float = 6.0,
    canvas_size: int = 288,
) -> Path:
    """Write a balanced synthetic dataset: media, ground truth, and manifest.

    Global rotation (+/-45 deg), scale (+/-20 %), translation and background
    are randomized per clip to exercise the preprocessing stages. Returns the
    manifest path.
    """
    if n_per_class < 1:
        raise DataError(f"n_per_class must be >= 1, got {n_per_class}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    entries: list[ManifestEntry] = []
    for profile in PROFILES:
        label = PROFILE_TO_LABEL[profile]
        for i in range(n_per_class):
            clip_id = f"{label.value.lower()}_{i:03d}"
            infant_id = f"inf_{label.value.lower()}_{i:03d}"
            spec = SynthSpec(
                class_profile=profile,
                duration_s=duration_s,
                fps=fps,
                canvas_size=canvas_size,
                rotation_deg=float(rng.uniform(-45.0, 45.0)),
                scale=float(rng.uniform(0.8, 1.2)),
                translation=(float(rng.uniform(-10, 10)), float(rng.uniform(-10, 10))),
                background="clutter" if rng.uniform() < 0.5 else "plain",
                seed=int(rng.integers(0, 2**31 - 1)),
            )
            clip, gt = generate(spec)
            clip_dir = out_dir / "clips" / clip_id
            save_image_sequence(
                VideoClip(clip.frames, fps=fps, infant_id=infant_id, clip_id=clip_id),
                clip_dir / "frames",
            )
            gt.save(clip_dir / "gt")
            entries.append(
                ManifestEntry(
                    clip_id=clip_id,
                    infant_id=infant_id,
                    video_path=str(Path("clips") / clip_id / "frames"),
                    label=label,
                    clip_start_s=0.0,
                    clip_end_s=duration_s,
                )
            )

    manifest_path = out_dir / "manifest.csv"
    save_manifest(DatasetManifest(entries=entries, root=out_dir), manifest_path)
    return manifest_path
