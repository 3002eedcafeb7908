"""Command-line entry points.

Subcommands: run (full pipeline), stage1, stage2, reconstruct, metrics,
noise-combine. Exit codes: 0 ok, 1 internal error, 2 bad input,
3 config error.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import exposure, media_io, metrics, noise, uvt
from .config import ConfigError, PipelineConfig, apply_setting, load_config
from .media_io import MediaFormatError
from .warp_mask import binarize_mask, build_pair_masks

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_BAD_INPUT = 2
EXIT_CONFIG = 3


class InputError(ValueError):
    pass


def _load_flows(dir_path, count, direction):
    d = Path(dir_path)
    if not d.is_dir():
        raise InputError(f"flow directory not found: {d}")
    paths = sorted(d.glob("*.flo"), key=media_io._frame_sort_key)
    if len(paths) != count:
        missing = count - len(paths)
        raise InputError(
            f"{d}: need {count} {direction} flow files (one per adjacent pair), "
            f"found {len(paths)} ({missing} missing)")
    return [media_io.load_flo(p, direction=direction, frame_index=i)
            for i, p in enumerate(paths)]


def _load_inputs(cfg: PipelineConfig, need_relit=True):
    source = media_io.load_frame_sequence(cfg.source_dir)
    n_frames = source.shape[0]
    flows_fwd = _load_flows(cfg.flow_fwd_dir, n_frames - 1, "forward")
    flows_bwd = None
    if cfg.flow_bwd_dir:
        flows_bwd = _load_flows(cfg.flow_bwd_dir, n_frames - 1, "backward")
    relit = None
    if need_relit:
        relit = media_io.load_frame_sequence(cfg.relit_dir)
        if relit.shape != source.shape:
            raise InputError(
                f"relit video shape {relit.shape} != source shape {source.shape}")
    return source, relit, flows_fwd, flows_bwd


def _load_depth(cfg: PipelineConfig, n_frames):
    if not cfg.depth_dir or cfg.voxel_size <= 0:
        return None, None
    d = Path(cfg.depth_dir)
    paths = sorted(list(d.glob("*.pfm")) + list(d.glob("*.png")), key=media_io._frame_sort_key)
    if len(paths) != n_frames:
        raise InputError(f"{d}: need {n_frames} depth maps, found {len(paths)}")
    depths = [media_io.load_depth_pfm(p) if p.suffix == ".pfm" else media_io.load_depth_png(p)
              for p in paths]
    cams = media_io.load_cameras(cfg.camera_file)
    if len(cams) != n_frames:
        raise InputError(f"{cfg.camera_file}: need {n_frames} cameras, found {len(cams)}")
    return depths, cams


def _write_curve(path, curve):
    lines = ["epoch,loss"] + [f"{i},{repr(v)}" for i, v in enumerate(curve)]
    Path(path).write_text("\n".join(lines) + "\n")


def _write_metrics(path, rows):
    lines = ["metric,value"] + [f"{k},{repr(float(v))}" for k, v in rows]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def _dump_uvt(out_dir, tensor: uvt.UniqueVideoTensor):
    values = tensor.values.astype(np.float32)[None, None]
    media_io.save_tensor4(Path(out_dir) / "uvt_values.t4", values)
    media_io.save_tensor4(Path(out_dir) / "uvt_index_map.t4",
                          tensor.keys.index_map.astype(np.float32)[None])


def _run_stage1(cfg: PipelineConfig):
    source, relit, flows_fwd, flows_bwd = _load_inputs(cfg)
    masks = build_pair_masks(source, flows_fwd, flows_bwd, cfg.mask())
    emb, aligned, curve = exposure.run_stage1(
        relit, flows_fwd, masks, cfg.stage1(), threads=cfg.threads)
    out = Path(cfg.out_dir)
    media_io.save_frame_sequence(out / "aligned", aligned, bit_depth=16)
    exposure.save_embeddings(out / "embeddings.txt", emb)
    _write_curve(out / "stage1_loss.csv", curve)
    return source, relit, flows_fwd, flows_bwd, masks, curve


def _run_stage2(cfg: PipelineConfig, source, flows_fwd, masks):
    out = Path(cfg.out_dir)
    # stage II always consumes the persisted stage I frames so that the
    # staged and monolithic paths are byte-identical
    aligned = media_io.load_frame_sequence(out / "aligned")
    if aligned.shape != source.shape:
        raise InputError("aligned video does not match source resolution")
    depths, cams = _load_depth(cfg, source.shape[0])
    masks_bin = [binarize_mask(m) for m in masks]
    keys = uvt.build_keys(source, flows_fwd, masks_bin, depths, cams, cfg.stage2())
    final, tensor, curve = uvt.run_stage2(
        aligned, keys, flows_fwd, masks, cfg.stage2(), threads=cfg.threads)
    media_io.save_frame_sequence(out / "final", final, bit_depth=8)
    _write_curve(out / "stage2_loss.csv", curve)
    if cfg.dump_uvt:
        _dump_uvt(out, tensor)
    return aligned, final, keys, curve


def cmd_run(cfg: PipelineConfig):
    source, relit, flows_fwd, flows_bwd, masks, _ = _run_stage1(cfg)
    aligned, final, keys, _ = _run_stage2(cfg, source, flows_fwd, masks)
    rows = [
        ("warp_ssim_input", metrics.warp_ssim_metric(relit, flows_fwd, masks)),
        ("warp_ssim_aligned", metrics.warp_ssim_metric(aligned, flows_fwd, masks)),
        ("warp_ssim_final", metrics.warp_ssim_metric(final, flows_fwd, masks)),
        ("warp_l1_input", metrics.warp_l1_metric(relit, flows_fwd, masks)),
        ("warp_l1_aligned", metrics.warp_l1_metric(aligned, flows_fwd, masks)),
        ("warp_l1_final", metrics.warp_l1_metric(final, flows_fwd, masks)),
        ("compression_rate", 100.0 * keys.n / source[:, :, :, 0].size),
    ]
    _write_metrics(Path(cfg.out_dir) / "metrics.csv", rows)
    for k, v in rows:
        print(f"{k} = {v:.6f}")
    return EXIT_OK


def cmd_stage1(cfg: PipelineConfig):
    _run_stage1(cfg)
    print(f"stage1 complete: {cfg.out_dir}/aligned, {cfg.out_dir}/embeddings.txt")
    return EXIT_OK


def cmd_stage2(cfg: PipelineConfig):
    source, _, flows_fwd, flows_bwd = _load_inputs(cfg, need_relit=False)
    masks = build_pair_masks(source, flows_fwd, flows_bwd, cfg.mask())
    _run_stage2(cfg, source, flows_fwd, masks)
    print(f"stage2 complete: {cfg.out_dir}/final")
    return EXIT_OK


def cmd_reconstruct(cfg: PipelineConfig):
    source, _, flows_fwd, flows_bwd = _load_inputs(cfg, need_relit=False)
    masks = build_pair_masks(source, flows_fwd, flows_bwd, cfg.mask())
    masks_bin = [binarize_mask(m) for m in masks]
    depths, cams = _load_depth(cfg, source.shape[0])
    keys = uvt.build_keys(source, flows_fwd, masks_bin, depths, cams, cfg.stage2())
    recon = uvt.scatter(uvt.gather(source, keys))
    report = metrics.reconstruction_metrics(source, recon, keys.n)
    rows = sorted(report.items())
    _write_metrics(Path(cfg.out_dir) / "reconstruct_metrics.csv", rows)
    for k, v in rows:
        print(f"{k} = {v:.6f}")
    return EXIT_OK


def cmd_metrics(cfg: PipelineConfig):
    source, _, flows_fwd, flows_bwd = _load_inputs(cfg, need_relit=False)
    masks = build_pair_masks(source, flows_fwd, flows_bwd, cfg.mask())
    frames_dir = cfg.metrics_frames_dir or cfg.source_dir
    video = media_io.load_frame_sequence(frames_dir)
    if video.shape != source.shape:
        raise InputError(f"{frames_dir}: shape {video.shape} != source {source.shape}")
    rows = [
        ("warp_ssim", metrics.warp_ssim_metric(video, flows_fwd, masks)),
        ("warp_l1", metrics.warp_l1_metric(video, flows_fwd, masks)),
    ]
    _write_metrics(Path(cfg.out_dir) / "metrics.csv", rows)
    for k, v in rows:
        print(f"{k} = {v:.6f}")
    return EXIT_OK


def cmd_noise_combine(args):
    eps_xy = media_io.load_tensor4(args.eps_xy).astype(np.float64)
    eps_yt = media_io.load_tensor4(args.eps_yt).astype(np.float64)
    sched = noise.GammaSchedule(args.gamma_start, args.gamma_end, args.steps)
    out = noise.combine_noise(eps_xy, eps_yt, sched, args.step,
                              swap_weights=args.swap_weights)
    media_io.save_tensor4(args.out, out.astype(np.float32))
    print(f"wrote {args.out} (gamma = {noise.gamma_at(sched, args.step):.6g})")
    return EXIT_OK


def _build_parser():
    p = argparse.ArgumentParser(prog="uvtc",
                                description="Two-stage temporal consistency post-optimization")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--dump-uvt", action="store_true")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")

    for name in ("run", "stage1", "stage2", "reconstruct", "metrics"):
        add_common(sub.add_parser(name))

    nc = sub.add_parser("noise-combine")
    nc.add_argument("--eps-xy", required=True)
    nc.add_argument("--eps-yt", required=True)
    nc.add_argument("--out", required=True)
    nc.add_argument("--step", type=int, required=True)
    nc.add_argument("--steps", type=int, default=25)
    nc.add_argument("--gamma-start", type=float, default=0.2)
    nc.add_argument("--gamma-end", type=float, default=0.002)
    nc.add_argument("--swap-weights", action="store_true")
    return p


def _resolve_config(args):
    cfg = load_config(args.config)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, val = item.partition("=")
        apply_setting(cfg, key.strip(), val.strip())
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.dump_uvt:
        cfg.dump_uvt = True
    return cfg


_COMMANDS = {
    "run": cmd_run,
    "stage1": cmd_stage1,
    "stage2": cmd_stage2,
    "reconstruct": cmd_reconstruct,
    "metrics": cmd_metrics,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    stage = args.command
    try:
        if stage == "noise-combine":
            return cmd_noise_combine(args)
        cfg = _resolve_config(args)
        return _COMMANDS[stage](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, MediaFormatError, FileNotFoundError) as exc:
        print(f"{stage}: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"{stage}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
