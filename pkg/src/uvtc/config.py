"""Flat key = value config files with CLI overrides.

Every pipeline hyperparameter lives here with its default value;
`#` starts a comment, unknown keys are rejected.
"""

from dataclasses import dataclass, field
from pathlib import Path

from .exposure import StageOneConfig
from .uvt import StageTwoConfig
from .warp_mask import MaskConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    source_dir: str = ""
    relit_dir: str = ""
    flow_fwd_dir: str = ""
    flow_bwd_dir: str = ""
    depth_dir: str = ""
    camera_file: str = ""
    out_dir: str = "out"
    seed: int = 0
    threads: int = 1
    dump_uvt: bool = False

    lambda_e: float = 0.8
    lambda_dssim: float = 0.2
    stage1_epochs: int = 35
    stage1_batch_size: int = 16
    stage1_lr_start: float = 0.01
    stage1_lr_end: float = 0.001

    lambda_u: float = 0.8
    lambda_tv: float = 0.01
    stage2_epochs: int = 70
    stage2_batch_size: int = 16
    stage2_lr: float = 0.05
    voxel_size: float = 0.0   # 0 disables voxel keys; outdoor 0.05, indoor 0.02
    use_rgb_key: bool = True

    mask_beta: float = 50.0
    mask_xi_flow: float = -1.0  # negative -> derive from error-map statistics
    mask_xi_rgb: float = -1.0
    flow_error_direction: str = "as_written"

    metrics_frames_dir: str = ""

    def stage1(self) -> StageOneConfig:
        return StageOneConfig(
            lambda_e=self.lambda_e, lambda_dssim=self.lambda_dssim,
            epochs=self.stage1_epochs, batch_size=self.stage1_batch_size,
            lr_start=self.stage1_lr_start, lr_end=self.stage1_lr_end,
            seed=self.seed, mask=self.mask())

    def stage2(self) -> StageTwoConfig:
        return StageTwoConfig(
            lambda_u=self.lambda_u, lambda_tv=self.lambda_tv,
            epochs=self.stage2_epochs, batch_size=self.stage2_batch_size,
            lr=self.stage2_lr,
            voxel_size=self.voxel_size if self.voxel_size > 0 else None,
            use_rgb_key=self.use_rgb_key, seed=self.seed)

    def mask(self) -> MaskConfig:
        explicit = self.mask_xi_flow >= 0 or self.mask_xi_rgb >= 0
        return MaskConfig(
            beta=self.mask_beta,
            xi_mode="explicit" if explicit else "mean_std",
            xi_flow=self.mask_xi_flow if self.mask_xi_flow >= 0 else None,
            xi_rgb=self.mask_xi_rgb if self.mask_xi_rgb >= 0 else None,
            flow_error_direction=self.flow_error_direction)


_FIELDS = {f.name: f.type for f in PipelineConfig.__dataclass_fields__.values()}


def _coerce(name, raw, current):
    if isinstance(current, bool):
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def apply_setting(cfg: PipelineConfig, name, raw):
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key: {name}")
    try:
        setattr(cfg, name, _coerce(name, raw, getattr(cfg, name)))
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def load_config(path) -> PipelineConfig:
    cfg = PipelineConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        try:
            apply_setting(cfg, key.strip(), val.strip())
        except ConfigError as exc:
            raise ConfigError(f"{p}:{lineno}: {exc}") from exc
    return cfg
