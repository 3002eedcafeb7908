"""File ingest/export: PNG frame sequences, Middlebury .flo optical flow,
PFM / 16-bit-PNG depth, camera parameter text files, and a small binary
container for rank-4 float tensors.

All loaders are pure functions; every loader/saver pair round-trips
bit-exactly on valid data.
"""

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

FLO_MAGIC = 202021.25
TENSOR4_MAGIC = b"UVT4"


class MediaFormatError(ValueError):
    """Malformed or unsupported file content."""


class BadMagic(MediaFormatError):
    pass


@dataclass(frozen=True)
class FlowField:
    data: np.ndarray          # (H, W, 2) float32, (u, v) in pixels
    direction: str = "forward"  # "forward": t -> t+1, "backward": t -> t-1
    frame_index: int = -1

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class DepthMap:
    data: np.ndarray   # (H, W) float32, meters
    valid: np.ndarray  # (H, W) bool


@dataclass(frozen=True)
class CameraParams:
    intrinsics: np.ndarray  # (3, 3)
    extrinsics: np.ndarray  # (4, 4) camera-to-world


_NUM_RE = re.compile(r"(\d+)")


def _frame_sort_key(path: Path):
    m = _NUM_RE.findall(path.stem)
    return (int(m[-1]) if m else 0, path.name)


def load_frame(path) -> np.ndarray:
    """Load one image as (H, W, 3) float64 in [0, 1]."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise MediaFormatError(f"cannot read image: {path}")
    if raw.ndim == 2:
        raw = raw[:, :, None].repeat(3, axis=2)
    if raw.shape[2] == 4:
        raw = raw[:, :, :3]
    raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    if raw.dtype == np.uint8:
        img = raw.astype(np.float64) / 255.0
    elif raw.dtype == np.uint16:
        img = raw.astype(np.float64) / 65535.0
    else:
        img = raw.astype(np.float64)
    return np.clip(img, 0.0, 1.0)


def save_frame(path, img, bit_depth=8):
    """Save (H, W, 3) float in [0, 1] as 8- or 16-bit PNG."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if bit_depth == 8:
        raw = np.floor(img * 255.0 + 0.5).astype(np.uint8)
    elif bit_depth == 16:
        raw = np.floor(img * 65535.0 + 0.5).astype(np.uint16)
    else:
        raise ValueError(f"unsupported bit depth: {bit_depth}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), cv2.cvtColor(raw, cv2.COLOR_RGB2BGR)):
        raise MediaFormatError(f"cannot write image: {path}")


def load_frame_sequence(dir_path, pattern="*.png") -> np.ndarray:
    """Load an ordered frame sequence as a (T, H, W, 3) float volume.

    Frames are ordered by the last integer in their filename stem.
    """
    d = Path(dir_path)
    if not d.is_dir():
        raise FileNotFoundError(f"frame directory not found: {d}")
    paths = sorted(d.glob(pattern), key=_frame_sort_key)
    if len(paths) < 2:
        raise MediaFormatError(f"need at least 2 frames in {d}, found {len(paths)}")
    frames = [load_frame(p) for p in paths]
    shapes = {f.shape for f in frames}
    if len(shapes) > 1:
        raise MediaFormatError(f"mixed frame resolutions in {d}: {sorted(shapes)}")
    return np.stack(frames)


def save_frame_sequence(dir_path, video, bit_depth=8, pattern="%06d.png"):
    d = Path(dir_path)
    d.mkdir(parents=True, exist_ok=True)
    for t in range(video.shape[0]):
        save_frame(d / (pattern % t), video[t], bit_depth=bit_depth)


def load_flo(path, direction="forward", frame_index=-1) -> FlowField:
    """Read a Middlebury .flo file (little-endian)."""
    blob = Path(path).read_bytes()
    if len(blob) < 12:
        raise MediaFormatError(f"truncated .flo header: {path}")
    (magic,) = struct.unpack("<f", blob[:4])
    if magic != FLO_MAGIC:
        raise BadMagic(f"bad .flo magic {magic!r} in {path}")
    w, h = struct.unpack("<ii", blob[4:12])
    if w <= 0 or h <= 0:
        raise MediaFormatError(f"bad .flo dims {w}x{h} in {path}")
    need = 12 + 8 * w * h
    if len(blob) < need:
        raise MediaFormatError(f"truncated .flo payload in {path}")
    data = np.frombuffer(blob[12:need], dtype="<f4").reshape(h, w, 2).copy()
    if not np.all(np.isfinite(data)):
        raise MediaFormatError(f"non-finite flow values in {path}")
    if np.any(np.abs(data[:, :, 0]) >= w) or np.any(np.abs(data[:, :, 1]) >= h):
        raise MediaFormatError(f"flow displacement exceeds image size in {path}")
    return FlowField(data=data, direction=direction, frame_index=frame_index)


def save_flo(path, flow):
    data = flow.data if isinstance(flow, FlowField) else np.asarray(flow)
    h, w = data.shape[:2]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(struct.pack("<f", FLO_MAGIC))
        f.write(struct.pack("<ii", w, h))
        f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def load_depth_pfm(path) -> DepthMap:
    """Read grayscale PFM ("Pf"); rows are stored bottom-up in the file."""
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header != b"Pf":
            raise MediaFormatError(f"not a grayscale PFM (header {header!r}): {path}")
        dims = f.readline().split()
        if len(dims) != 2:
            raise MediaFormatError(f"malformed PFM dims line in {path}")
        w, h = int(dims[0]), int(dims[1])
        if w <= 0 or h <= 0:
            raise MediaFormatError(f"bad PFM dims {w}x{h} in {path}")
        scale = float(f.readline().strip())
        endian = "<" if scale < 0 else ">"
        payload = f.read(4 * w * h)
    if len(payload) != 4 * w * h:
        raise MediaFormatError(f"PFM payload size mismatch in {path}")
    data = np.frombuffer(payload, dtype=endian + "f4").reshape(h, w)
    data = data[::-1].copy()  # bottom-up storage -> top-down
    valid = np.isfinite(data) & (data > 0)
    return DepthMap(data=data, valid=valid)


def save_depth_pfm(path, depth):
    data = depth.data if isinstance(depth, DepthMap) else np.asarray(depth)
    h, w = data.shape
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode())
        f.write(b"-1.0\n")
        f.write(np.ascontiguousarray(data[::-1], dtype="<f4").tobytes())


def load_depth_png(path, scale=0.001) -> DepthMap:
    """16-bit PNG depth in millimeters -> meters."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None or raw.ndim != 2:
        raise MediaFormatError(f"cannot read depth PNG: {path}")
    data = raw.astype(np.float32) * scale
    return DepthMap(data=data, valid=data > 0)


def load_cameras(path) -> list:
    """One camera per line: 9 intrinsic + 16 extrinsic numbers, row-major."""
    cams = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        vals = [float(v) for v in line.split()]
        if len(vals) != 25:
            raise MediaFormatError(f"{path}:{lineno}: expected 25 numbers, got {len(vals)}")
        k = np.array(vals[:9]).reshape(3, 3)
        e = np.array(vals[9:]).reshape(4, 4)
        if k[0, 0] <= 0 or k[1, 1] <= 0 or np.any(np.abs(np.tril(k, -1)) > 1e-9):
            raise MediaFormatError(f"{path}:{lineno}: intrinsics not upper-triangular with positive focals")
        if not np.allclose(e[3], [0, 0, 0, 1]):
            raise MediaFormatError(f"{path}:{lineno}: extrinsics last row must be [0,0,0,1]")
        cams.append(CameraParams(intrinsics=k, extrinsics=e))
    return cams


def save_cameras(path, cams):
    lines = []
    for c in cams:
        nums = list(c.intrinsics.ravel()) + list(c.extrinsics.ravel())
        lines.append(" ".join(repr(float(v)) for v in nums))
    Path(path).write_text("\n".join(lines) + "\n")


def load_tensor4(path) -> np.ndarray:
    """Read the rank-4 float32 container written by save_tensor4."""
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:4] != TENSOR4_MAGIC:
        raise BadMagic(f"bad tensor container magic in {path}")
    (rank,) = struct.unpack("<I", blob[4:8])
    if rank != 4:
        raise MediaFormatError(f"expected rank 4, got {rank} in {path}")
    if len(blob) < 24:
        raise MediaFormatError(f"truncated tensor header in {path}")
    dims = struct.unpack("<4I", blob[8:24])
    if any(d == 0 for d in dims):
        raise MediaFormatError(f"zero-size dimension {dims} in {path}")
    count = int(np.prod(dims, dtype=np.uint64))
    need = 24 + 4 * count
    if len(blob) < need:
        raise MediaFormatError(f"truncated tensor payload in {path}")
    return np.frombuffer(blob[24:need], dtype="<f4").reshape(dims).copy()


def save_tensor4(path, tensor):
    t = np.asarray(tensor)
    if t.ndim != 4:
        raise ValueError(f"tensor must be rank 4, got rank {t.ndim}")
    if any(d == 0 for d in t.shape):
        raise ValueError(f"zero-size dimension in shape {t.shape}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(TENSOR4_MAGIC)
        f.write(struct.pack("<I", 4))
        f.write(struct.pack("<4I", *t.shape))
        f.write(np.ascontiguousarray(t, dtype="<f4").tobytes())
