"""Command-line entry point: ``spatialdiar <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 on data errors
(unreadable or malformed inputs).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation, features, io, pipeline, pseudo_doa, scene
from .geometry import AzimuthGrid, parse_array_arg
from .localizer import IdlConfig
from .stft import StftConfig, n_frames
from .streaming import BlockConfig
from .tracker import TrackerConfig

log = logging.getLogger("spatialdiar")

_GROUPS = {
    "stft": (StftConfig, {"sample_rate": int, "fft_size": int, "hop": int}),
    "idl": (IdlConfig, {"n_max": int, "w_min": float, "min_separation_bins": int}),
    "tracker": (TrackerConfig, {"gate_deg": float, "max_gap_frames": int, "min_track_frames": int, "merge_threshold_deg": float}),
    "block": (BlockConfig, {"l_left": float, "l_chunk": float, "l_right": float}),
    "pseudo": (pseudo_doa.PseudoDoaConfig, {"min_separation_deg": float, "jitter_std_deg": float, "max_drift_deg": float}),
}
_SCALARS = {"alpha": float, "resolution": float, "array": str, "speed_of_sound": float}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        raw = io.read_config(path)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    known = set(_SCALARS)
    for _, fields in _GROUPS.values():
        known |= set(fields)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise DataError(f"{path}: unknown config keys: {', '.join(unknown)}")
    conf = {}
    for key, value in raw.items():
        conv = _SCALARS.get(key) or next(f[key] for _, f in _GROUPS.values() if key in f)
        try:
            conf[key] = conv(value)
        except ValueError as exc:
            raise DataError(f"{path}: bad value for {key}: {value!r}") from exc
    return conf


def _group(conf: dict, name: str, **overrides):
    cls, fields = _GROUPS[name]
    kwargs = {k: conf[k] for k in fields if k in conf}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _settings(args, conf) -> pipeline.LocalizerSettings:
    array = args.array or conf.get("array", "circular:8:0.05")
    try:
        geom = parse_array_arg(array, conf.get("speed_of_sound", 343.0))
        grid = AzimuthGrid(conf.get("resolution", 5.0))
    except OSError as exc:
        raise DataError(f"cannot read array geometry: {exc}") from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return pipeline.LocalizerSettings(
        geometry=geom,
        stft=_group(conf, "stft"),
        grid=grid,
        idl=_group(conf, "idl", w_min=getattr(args, "w_min", None), n_max=getattr(args, "n_max", None)),
        alpha=conf.get("alpha", 0.6),
    )


def _read_audio(path, settings) -> np.ndarray:
    try:
        _, audio = io.read_wav(path, settings.stft.sample_rate)
    except FileNotFoundError as exc:
        raise DataError(f"{path}: no such file") from exc
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    if audio.shape[0] != settings.geometry.n_mics:
        raise DataError(f"{path}: {audio.shape[0]} channels but the array has {settings.geometry.n_mics} microphones")
    if audio.shape[1] < settings.stft.fft_size:
        raise DataError(f"{path}: input too short")
    return audio


def _localize_file(path, args, conf, keep_spectra=False) -> pipeline.Localization:
    settings = _settings(args, conf)
    audio = _read_audio(path, settings)
    provider = getattr(args, "provider", "phat")
    if provider == "oracle":
        if not args.truth:
            raise UsageError("--provider oracle requires --truth <tracks.csv>")
        if args.online:
            raise UsageError("--online is only available for the phat provider")
        try:
            tracks = io.read_tracks_csv(args.truth)
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"cannot read truth tracks {args.truth}: {exc}") from exc
        activity = io.tracks_to_activity(tracks, n_frames(audio.shape[1], settings.stft))
        return pipeline.localize(audio, settings, "oracle", activity, keep_spectra)
    if args.online:
        return pipeline.localize_online(audio, settings, _group(conf, "block"), keep_spectra)
    return pipeline.localize(audio, settings, "phat", keep_spectra=keep_spectra)


def _out_path(args, src: Path, suffix: str):
    if getattr(args, "out_dir", None):
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        return Path(args.out_dir) / (src.stem + suffix)
    return Path(args.out) if args.out else None


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _do_localize(path, args, conf):
    loc = _localize_file(path, args, conf)
    _emit(io.write_detections_csv(loc.detections, loc.frame_period), _out_path(args, Path(path), ".csv"))
    if args.matrix:
        settings = _settings(args, conf)
        o = features.build_doa_matrix(loc.detections, settings.grid, loc.n_frames, loc.frame_period)
        if args.binarize:
            o = o.binarized()
        Path(args.matrix).write_text(features.write_doa_matrix_csv(o))
    return path


def _do_diarize(path, args, conf):
    loc = _localize_file(path, args, conf)
    settings = _settings(args, conf)
    tracker = _group(conf, "tracker")
    # report frames at their window centre
    offset = (settings.stft.fft_size / 2 - settings.stft.hop / 2) / settings.stft.sample_rate
    segs = pipeline.diarize(loc, tracker, Path(path).stem, offset)
    _emit(evaluation.write_rttm(segs), _out_path(args, Path(path), ".rttm"))
    return path


def _fan_out(fn, args, conf):
    if len(args.inputs) > 1 and not args.out_dir:
        raise UsageError("several inputs need --out-dir")
    if args.jobs > 1 and len(args.inputs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            futures = [pool.submit(fn, p, args, conf) for p in args.inputs]
            for fut in futures:
                fut.result()
    else:
        for p in args.inputs:
            fn(p, args, conf)


def cmd_simulate(args, conf):
    try:
        spec = scene.load_scene_spec(args.scene)
    except OSError as exc:
        raise DataError(f"cannot read scene {args.scene}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{args.scene}: {exc}") from exc
    spec = dataclasses.replace(spec, seed=args.seed)
    if args.array:
        spec = dataclasses.replace(spec, geometry=parse_array_arg(args.array))
    stft_cfg = _group(conf, "stft", sample_rate=spec.sample_rate)
    try:
        out = scene.render_scene(spec, stft_cfg)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    io.write_wav(d / f"{spec.recording}.wav", out.audio, spec.sample_rate)
    (d / f"{spec.recording}.rttm").write_text(evaluation.write_rttm(out.reference))
    (d / f"{spec.recording}_tracks.csv").write_text(pseudo_doa.write_tracks_csv(out.tracks))
    print(d / f"{spec.recording}.wav")


def cmd_localize(args, conf):
    _fan_out(_do_localize, args, conf)


def cmd_diarize(args, conf):
    _fan_out(_do_diarize, args, conf)


def cmd_pseudo_doa(args, conf):
    try:
        recs = evaluation.read_rttm(args.rttm)
    except OSError as exc:
        raise DataError(f"cannot read {args.rttm}: {exc}") from exc
    except evaluation.RttmError as exc:
        raise DataError(f"{args.rttm}: {exc}") from exc
    if not recs:
        raise DataError(f"{args.rttm}: no SPEAKER records")
    rec = recs[args.recording] if args.recording else next(iter(recs.values()))
    cfg = _group(conf, "pseudo", seed=args.seed, min_separation_deg=args.min_separation,
                 jitter_std_deg=args.jitter, max_drift_deg=args.max_drift)
    vad = pseudo_doa.VadTimeline.from_segments(rec)
    grid = AzimuthGrid(conf.get("resolution", 5.0))
    try:
        matrix, tracks, _ = pseudo_doa.simulate_pseudo_doa(vad, cfg, args.frame_period, args.duration, grid)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _emit(features.write_doa_matrix_csv(matrix), args.out)
    if args.tracks:
        Path(args.tracks).write_text(pseudo_doa.write_tracks_csv(tracks))


def cmd_score(args, conf):
    try:
        ref = evaluation.read_rttm(args.ref)
        hyp = evaluation.read_rttm(args.hyp)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    except evaluation.RttmError as exc:
        raise DataError(str(exc)) from exc
    results = {}
    for rec, segs in ref.items():
        h = hyp.get(rec, evaluation.SpeakerSegments(rec))
        try:
            results[rec] = evaluation.compute_der(segs, h, args.frame_period, args.collar, args.oracle_vad)
        except ValueError as exc:
            raise DataError(f"{rec}: {exc}") from exc
    if not results:
        raise DataError(f"{args.ref}: empty reference")
    text = evaluation.format_der_csv(results) if args.csv else evaluation.format_der_table(results)
    sys.stdout.write(text)
    if args.csv_out:
        Path(args.csv_out).write_text(evaluation.format_der_csv(results))


def cmd_spectrum_dump(args, conf):
    loc = _localize_file(args.wav, args, conf, keep_spectra=True)
    settings = _settings(args, conf)
    out = args.out
    if out is None:
        io.write_spectra_csv(loc.spectra, settings.grid.centers_deg, sys.stdout)
    else:
        with open(out, "w") as fh:
            io.write_spectra_csv(loc.spectra, settings.grid.centers_deg, fh)
    if args.svg:
        _write_svg(loc.spectra, settings, args.svg)


def _write_svg(spectra, settings, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = spectra.shape[0] * settings.stft.frame_period
    fig, ax = plt.subplots(figsize=(8, 3.5))
    im = ax.imshow(spectra.T, origin="lower", aspect="auto", extent=(0, t, -180, 180), cmap="magma")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("azimuth [deg]")
    fig.colorbar(im, ax=ax, label="SRP")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spatialdiar", description="DOA estimation and spatial diarization toolkit")
    p.add_argument("--config", help="key=value overrides file")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def with_array(sp):
        sp.add_argument("--array", help="circular:<M>:<radius> or a geometry file (x y z per line)")
        sp.add_argument("--w-min", type=float, dest="w_min")
        sp.add_argument("--n-max", type=int, dest="n_max")

    s = sub.add_parser("simulate", help="render a scene to WAV + RTTM + tracks")
    s.add_argument("scene")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--array")
    s.set_defaults(func=cmd_simulate)

    for name, func, help_ in (
        ("localize", cmd_localize, "per-frame detections CSV"),
        ("diarize", cmd_diarize, "RTTM from DOA tracks"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("inputs", nargs="+", metavar="wav")
        with_array(s)
        s.add_argument("--provider", choices=("oracle", "phat"), default="phat")
        s.add_argument("--truth", help="ground-truth tracks CSV for the oracle provider")
        s.add_argument("--online", action="store_true", help="block-wise streaming execution")
        s.add_argument("--out", help="output file (default stdout)")
        s.add_argument("--out-dir")
        s.add_argument("--jobs", type=int, default=1)
        if name == "localize":
            s.add_argument("--matrix", help="also write the DOA matrix CSV")
            s.add_argument("--binarize", action="store_true")
        s.set_defaults(func=func)

    s = sub.add_parser("pseudo-doa", help="pseudo-DOA matrix from an RTTM VAD")
    s.add_argument("rttm")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--recording")
    s.add_argument("--frame-period", type=float, default=0.016)
    s.add_argument("--duration", type=float)
    s.add_argument("--min-separation", type=float)
    s.add_argument("--jitter", type=float)
    s.add_argument("--max-drift", type=float)
    s.add_argument("--out")
    s.add_argument("--tracks")
    s.set_defaults(func=cmd_pseudo_doa)

    s = sub.add_parser("score", help="DER of a hypothesis RTTM")
    s.add_argument("--ref", required=True)
    s.add_argument("--hyp", required=True)
    s.add_argument("--frame-period", type=float, default=0.01)
    s.add_argument("--collar", type=float, default=0.0)
    s.add_argument("--oracle-vad", action="store_true")
    s.add_argument("--csv", action="store_true", help="print file,miss,fa,conf,der")
    s.add_argument("--csv-out")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("spectrum-dump", help="per-frame spectra CSV and optional SVG")
    s.add_argument("wav")
    with_array(s)
    s.add_argument("--provider", choices=("oracle", "phat"), default="phat")
    s.add_argument("--truth")
    s.add_argument("--online", action="store_true")
    s.add_argument("--out")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_spectrum_dump)
    return p


def main(argv=None) -> int:
    level = os.environ.get("SPATIAL_DIAR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        conf = _load_config(args.config)
        args.func(args, conf)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spatialdiar: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"spatialdiar: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
