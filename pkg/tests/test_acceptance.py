"""End-to-end acceptance bars.

Each test records one PASS/FAIL row; the rows are printed together in the
terminal summary (see ``conftest.pytest_terminal_summary``) and also to
stdout when run with ``-s``.
"""

import csv
import math
import os
import random
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from der_oracle import exhaustive_der
from test_evaluation import HAND_CASES, random_instance, segs

from spatialdiar.cli import main
from spatialdiar.evaluation import compute_der
from spatialdiar.features import (
    build_doa_matrix,
    fuse_additive,
    interpolate_nearest,
)
from spatialdiar.geometry import ArrayGeometry, AzimuthGrid, DoaAngle, circular_array
from spatialdiar.io import write_wav
from spatialdiar.localizer import IdlConfig, SourceDetection, SteeringTable, idl_localize, srp_spectrum
from spatialdiar.pipeline import LocalizerSettings, localize
from spatialdiar.providers import oracle_summed_dpipd
from spatialdiar.pseudo_doa import PseudoDoaConfig, VadTimeline, circular_distance_deg, simulate_pseudo_doa
from spatialdiar.scene import SceneSpec, SourceSpec, render_scene
from spatialdiar.stft import StftConfig
from spatialdiar.streaming import BlockConfig, BlockStreamer, stream_blocks

FS = 16000


def record(num, title, ok, detail):
    ACCEPTANCE.append((num, title, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {num:>2}. {title}: {detail}")


@pytest.fixture(scope="module")
def setup():
    geom = circular_array(8, 0.05)
    cfg = StftConfig()
    grid = AzimuthGrid()
    return geom, cfg.freqs, grid, SteeringTable(geom, grid, cfg.freqs)


def field_for(geom, freqs, sources):
    return oracle_summed_dpipd(geom, freqs, [(DoaAngle.from_degrees(a), b) for a, b in sources])


# 1 ---------------------------------------------------------------------------


def test_01_normalization_identity(setup):
    geom, freqs, grid, table = setup
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst, misses = 0.0, 0
    for i in range(100):
        if i % 2:
            # random planar array of 4 to 8 mics inside a 10 cm square
            pos = rng.uniform(-0.05, 0.05, size=(int(rng.integers(4, 9)), 2))
            g = ArrayGeometry(pos)
            tab = SteeringTable(g, grid, freqs)
        else:
            g, tab = geom, table
        b = int(rng.integers(grid.n_bins))
        spec = srp_spectrum(field_for(g, freqs, [(grid.center_deg(b), 1.0)]), tab)
        misses += spec.argmax() != b
        worst = max(worst, abs(spec.values[b] - 1.0))
    elapsed = time.perf_counter() - t0
    ok = misses == 0 and worst <= 1e-9 and elapsed < 5.0
    record(1, "normalization identity", ok,
           f"wrong peaks {misses}/100, max |P-1| = {worst:.1e}, {elapsed:.2f} s (< 5 s)")
    assert ok


# 2 ---------------------------------------------------------------------------


def test_02_single_source_sweep(setup):
    geom, freqs, grid, table = setup
    cfg = IdlConfig()
    t0 = time.perf_counter()
    exact_errors = 0
    for b in range(grid.n_bins):
        dets = idl_localize(field_for(geom, freqs, [(grid.center_deg(b), 1.0)]), cfg, table)
        exact_errors += not dets or dets[0].bin != b
    rng = np.random.default_rng(202)
    far = 0
    worst = 0.0
    for az in rng.uniform(-180.0, 180.0, 1000):
        dets = idl_localize(field_for(geom, freqs, [(az, 1.0)]), cfg, table)
        err = circular_distance_deg(dets[0].azimuth_deg, az) if dets else 180.0
        worst = max(worst, err)
        far += err > 5.0
    elapsed = time.perf_counter() - t0
    ok = exact_errors == 0 and far == 0 and elapsed < 30.0
    record(2, "single-source sweep", ok,
           f"on-grid errors {exact_errors}/72, off-grid > 5 deg {far}/1000 "
           f"(worst {worst:.2f} deg), {elapsed:.2f} s (< 30 s)")
    assert ok


# 3 ---------------------------------------------------------------------------


def cross_gain(geom, freqs, az_a, az_b):
    """Brute-force normalized response between two in-plane directions.

    Cosine of the delay mismatch averaged over pairs and frequencies, so it
    equals the spectrum of a unit field from ``az_a`` read at ``az_b``.
    """
    pos = geom.mic_positions
    i, j = np.triu_indices(len(pos), 1)
    d = pos[i] - pos[j]
    ua = np.array([math.cos(math.radians(az_a)), math.sin(math.radians(az_a)), 0.0])
    ub = np.array([math.cos(math.radians(az_b)), math.sin(math.radians(az_b)), 0.0])
    dtau = d @ (ua - ub) / geom.speed_of_sound
    return float(np.mean(np.cos(2 * np.pi * np.outer(dtau, freqs))))


def weight_bounds(geom, freqs, grid, a1, a2, b1_pool, b2_pool, beta=(0.7, 0.3)):
    """Worst-case weight deviation over every admissible pair of detected bins."""
    g = lambda a, b: cross_gain(geom, freqs, a, b)  # noqa: E731
    d1 = d2 = 0.0
    for b1 in b1_pool:
        c1 = grid.center_deg(b1)
        w1 = min(max(beta[0] * g(a1, c1) + beta[1] * g(a2, c1), 0.0), 1.0)
        d1 = max(d1, abs(w1 - beta[0]))
        for b2 in b2_pool:
            c2 = grid.center_deg(b2)
            w2 = beta[0] * g(a1, c2) + beta[1] * g(a2, c2) - w1 * g(c1, c2)
            d2 = max(d2, abs(min(max(w2, 0.0), 1.0) - beta[1]))
    return d1, d2


def test_03_idl_two_sources(setup):
    geom, freqs, grid, table = setup
    cfg = IdlConfig()
    rng = np.random.default_rng(303)
    good = 0
    worst_bound = [0.0, 0.0]
    for _ in range(500):
        a1 = float(rng.uniform(-180.0, 180.0))
        sep = float(rng.uniform(30.0, 180.0))
        a2 = (a1 + rng.choice([-1.0, 1.0]) * sep + 180.0) % 360.0 - 180.0
        dets = idl_localize(field_for(geom, freqs, [(a1, 0.7), (a2, 0.3)]), cfg, table)
        if len(dets) != 2:
            continue
        e1 = circular_distance_deg(dets[0].azimuth_deg, a1)
        e2 = circular_distance_deg(dets[1].azimuth_deg, a2)
        if e1 > 10.0 or e2 > 10.0:
            continue
        pool = lambda a: [b for b in range(grid.n_bins) if circular_distance_deg(grid.center_deg(b), a) <= 10.0]  # noqa: E731
        d1, d2 = weight_bounds(geom, freqs, grid, a1, a2, pool(a1), pool(a2))
        worst_bound = [max(worst_bound[0], d1), max(worst_bound[1], d2)]
        if abs(dets[0].weight - 0.7) <= d1 + 1e-9 and abs(dets[1].weight - 0.3) <= d2 + 1e-9:
            good += 1
    ok = good >= 495
    record(3, "IDL two-source recovery", ok,
           f"{good}/500 draws recovered within 10 deg and the cross-term bound "
           f"(largest bounds {worst_bound[0]:.3f}, {worst_bound[1]:.3f}); need >= 99%")
    assert ok


# 4 ---------------------------------------------------------------------------


def test_04_phat_end_to_end():
    geom = circular_array(8, 0.05)
    settings = LocalizerSettings(geom)
    rng = np.random.default_rng(404)
    single = []
    for k in range(4):
        az = float(rng.uniform(-180.0, 180.0))
        r = render_scene(SceneSpec([SourceSpec(az, "noise", [(0.4, 5.6)])], geom, duration=6.0, snr_db=20.0, seed=k))
        loc = localize(r.audio, settings)
        hits = [
            bool(loc.detections[t]) and circular_distance_deg(loc.detections[t][0].azimuth_deg, az) <= 5.0
            for t, fr in enumerate(r.activity.frames) if fr
        ]
        single.append(float(np.mean(hits)))
    double = []
    for k, sep in enumerate([30.0, 45.0, 90.0, 150.0]):
        a1 = float(rng.uniform(-180.0, 180.0))
        a2 = (a1 + sep + 180.0) % 360.0 - 180.0
        spec = SceneSpec(
            [SourceSpec(a1, "noise", [(0.3, 6.0)]), SourceSpec(a2, "noise", [(1.5, 7.5)])],
            geom, duration=8.0, snr_db=20.0, seed=10 + k,
        )
        r = render_scene(spec)
        loc = localize(r.audio, settings)
        hits = []
        for t, fr in enumerate(r.activity.frames):
            if len(fr) != 2:
                continue
            azs = [d.azimuth_deg for d in loc.detections[t]]
            hits.append(all(any(circular_distance_deg(x, a) <= 10.0 for x in azs) for a in (a1, a2)))
        double.append(float(np.mean(hits)))
    ok = min(single) >= 0.95 and min(double) >= 0.90
    record(4, "PHAT end-to-end", ok,
           "single-speaker frames within 5 deg " + ", ".join(f"{x:.1%}" for x in single)
           + " (need >= 95%); double-talk within 10 deg at 30/45/90/150 deg "
           + ", ".join(f"{x:.1%}" for x in double) + " (need >= 90%)")
    assert ok


# 5 ---------------------------------------------------------------------------


def test_05_der_oracle_equivalence():
    rng = random.Random(505)
    exact = 0
    for _ in range(200):
        ref, hyp = random_instance(rng, 5, 20)
        err, total = exhaustive_der(ref, hyp)
        exact += compute_der(segs(*ref), segs(*hyp)).der == err / total
    hand = 0
    for ref, hyp, miss, fa, conf in HAND_CASES:
        total = sum(d for _, _, d in ref)
        r = compute_der(segs(*ref), segs(*hyp))
        hand += (abs(r.missed_speech - miss / total) <= 1e-4 and abs(r.false_alarm - fa / total) <= 1e-4
                 and abs(r.speaker_confusion - conf / total) <= 1e-4)
    ok = exact == 200 and hand == len(HAND_CASES)
    record(5, "DER oracle equivalence", ok,
           f"exact matches {exact}/200, hand cases {hand}/{len(HAND_CASES)} (first is the 0.20 miss case)")
    assert ok


# 6 ---------------------------------------------------------------------------


SCHEDULES = [
    ("0.5-5.0,7.0-10.0", "4.0-7.5,9.5-13.0"),
    ("0.3-3.0,5.5-9.0,11.0-13.5", "2.5-5.8,8.6-11.2"),
    ("1.0-6.0,9.0-12.0", "5.0-9.4,11.5-14.0"),
]


def overlap_fraction(a, b, step=0.01):
    t = np.arange(0.0, 20.0, step)
    act = lambda s: np.any([(t >= float(x.split("-")[0])) & (t < float(x.split("-")[1])) for x in s.split(",")], axis=0)  # noqa: E731
    ma, mb = act(a), act(b)
    return (ma & mb).sum() / (ma | mb).sum()


def test_06_end_to_end_diarization(tmp_path):
    rng = np.random.default_rng(606)
    ders, overlaps = [], []
    for k, (sa, sb) in enumerate(SCHEDULES):
        a1 = float(rng.uniform(-180.0, 180.0))
        sep = 30.0 if k == 0 else float(rng.uniform(30.0, 180.0))
        a2 = (a1 + sep + 180.0) % 360.0 - 180.0
        overlaps.append(overlap_fraction(sa, sb))
        d = tmp_path / f"s{k}"
        d.mkdir()
        (d / "scene.txt").write_text(
            f"recording = meet{k}\nduration = 15\nsnr_db = 20\narray = circular:8:0.05\n"
            f"source = {a1:.2f} noise {sa} alice\nsource = {a2:.2f} noise {sb} bob\n"
        )
        assert main(["simulate", str(d / "scene.txt"), "--seed", str(k), "--out-dir", str(d)]) == 0
        assert main(["diarize", str(d / f"meet{k}.wav"), "--provider", "phat", "--out", str(d / "hyp.rttm")]) == 0
        assert main(["score", "--ref", str(d / f"meet{k}.rttm"), "--hyp", str(d / "hyp.rttm"),
                     "--csv-out", str(d / "der.csv")]) == 0
        rows = list(csv.DictReader(open(d / "der.csv")))
        ders.append(float(rows[0]["der"]))
    ok = max(overlaps) <= 0.4 and max(ders) <= 0.10
    record(6, "end-to-end diarization", ok,
           "DER " + ", ".join(f"{x:.2%}" for x in ders) + " (need <= 10%), overlap "
           + ", ".join(f"{x:.0%}" for x in overlaps))
    assert ok


# 7 ---------------------------------------------------------------------------


def unit_index_processor(hop):
    def proc(window):
        return [window[0, j] for j in range(0, window.shape[1], hop)]

    return proc


def test_07_streaming_contract():
    hop = StftConfig().hop
    block = BlockConfig()
    rng = np.random.default_rng(707)
    n = int(9.1 * FS)
    ramp = np.arange(1, n + 1, dtype=float)[None]
    streamer = BlockStreamer(block, FS, unit_index_processor(hop), unit_hop=hop)
    latency, pos = {}, 0
    while pos < n:
        piece = ramp[:, pos : pos + int(rng.integers(1, hop + 1))]
        pos += piece.shape[1]
        for unit, _ in streamer.push(piece):
            latency[unit] = pos / FS - unit * hop / FS
    for unit, _ in streamer.flush():
        latency[unit] = pos / FS - unit * hop / FS
    all_units = sorted(latency) == list(range(-(-n // hop)))
    worst = max(latency.values())
    bound = block.latency + hop / FS

    tiled = 0
    for dur in rng.uniform(0.01, 20.0, 50):
        m = int(dur * FS)
        r = np.arange(1, m + 1, dtype=float)[None]
        out = stream_blocks(r, block, unit_index_processor(hop), FS, unit_hop=hop)
        tiled += np.array_equal(np.asarray(out), np.arange(0, m, hop) + 1.0)
    ok = all_units and worst <= bound + 1e-9 and tiled == 50
    record(7, "streaming contract", ok,
           f"max latency {worst:.3f} s (bound {bound:.3f} s), every frame once: {all_units}, "
           f"exact tiling {tiled}/50 durations")
    assert ok


# 8 ---------------------------------------------------------------------------


def brute_matrix(dets, n_frames, n_bins, res=5.0):
    out = [[0.0] * n_bins for _ in range(n_frames)]
    for d in dets:
        b = int(math.floor((d.azimuth_deg + 180.0) / res)) % n_bins
        out[d.frame][b] += d.weight
    return np.array(out)


def brute_interp(rows, t_out):
    t_in = len(rows)
    return np.array([rows[(t * t_in) // t_out] for t in range(t_out)])


def brute_fuse(x, o, w):
    t_n, d_n = x.shape
    out = np.empty_like(x)
    for t in range(t_n):
        for d in range(d_n):
            acc = 0.0
            for a in range(o.shape[1]):
                acc += o[t, a] * w[a, d]
            out[t, d] = x[t, d] + acc / math.sqrt(d_n)
    return out


def test_08_feature_pipeline():
    grid = AzimuthGrid()
    rng = np.random.default_rng(808)
    worst = 0.0
    non_integer = 0
    for _ in range(40):
        t_src = int(rng.integers(1, 30))
        t_dst = t_src + int(rng.integers(0, 50))
        non_integer += t_dst % t_src != 0
        dets = []
        for f in range(t_src):
            # distinct bins per frame so the summed oracle has no collisions
            for b in rng.choice(grid.n_bins, size=int(rng.integers(0, 3)), replace=False):
                az = grid.center_deg(int(b)) + rng.uniform(-2.4, 2.4)
                dets.append(SourceDetection(f, int(b), float(az), float(rng.uniform(0.0, 1.0))))
        o = build_doa_matrix([dets], grid, t_src, 0.08)
        ref_o = brute_matrix(dets, t_src, grid.n_bins)
        worst = max(worst, np.abs(o.values - ref_o).max())
        up = interpolate_nearest(o, t_dst)
        worst = max(worst, np.abs(up.values - brute_interp(list(ref_o), t_dst)).max())
        dim = int(rng.integers(1, 12))
        x = rng.standard_normal((t_dst, dim))
        w = rng.standard_normal((grid.n_bins, dim))
        worst = max(worst, np.abs(fuse_additive(x, up, w) - brute_fuse(x, up.values, w)).max())
    # collisions in one bin keep the larger weight
    o = build_doa_matrix([[SourceDetection(0, 5, -152.0, 0.3), SourceDetection(0, 5, -153.0, 0.6)]], grid, 1)
    collision_ok = o.values[0, 5] == 0.6
    ok = worst <= 1e-9 and non_integer > 0 and collision_ok
    record(8, "DOA feature pipeline", ok,
           f"max deviation {worst:.1e} over 40 shapes ({non_integer} non-integer ratios), "
           f"collision keeps max: {collision_ok}")
    assert ok


# 9 ---------------------------------------------------------------------------


def random_vad(rng):
    ivs = {}
    for s in range(int(rng.integers(1, 6))):
        t, pieces = float(rng.uniform(0.0, 2.0)), []
        while t < 18.0:
            on = t + float(rng.uniform(0.0, 3.0))
            off = on + float(rng.uniform(0.1, 4.0))
            pieces.append((on, off))
            t = off + 0.05
        ivs[f"spk{s}"] = pieces
    return VadTimeline(ivs)


def test_09_pseudo_doa_contract():
    good = 0
    for seed in range(100):
        rng = np.random.default_rng(9000 + seed)
        vad = random_vad(rng)
        cfg = PseudoDoaConfig(seed=seed)
        o, tracks, bases = simulate_pseudo_doa(vad, cfg, 0.016, 25.0)
        again, tracks2, _ = simulate_pseudo_doa(vad, cfg, 0.016, 25.0)
        b = list(bases.values())
        sep_ok = all(circular_distance_deg(b[i], b[j]) >= cfg.min_separation_deg
                     for i in range(len(b)) for j in range(i + 1, len(b)))
        cap_ok = np.all(np.count_nonzero(o.values, axis=1) <= 2)
        centers = (np.arange(o.n_frames) + 0.5) * 0.016
        active = np.zeros(o.n_frames, bool)
        for pieces in vad.intervals.values():
            for on, off in pieces:
                active |= (centers >= on) & (centers < off)
        silent_ok = not np.any(o.values[~active])
        same = o.values.tobytes() == again.values.tobytes() and tracks == tracks2
        good += bool(sep_ok and cap_ok and silent_ok and same)
    ok = good == 100
    record(9, "pseudo-DOA contract", ok, f"{good}/100 seeded runs satisfy every invariant")
    assert ok


# 10 --------------------------------------------------------------------------


@pytest.mark.slow
def test_10_performance(tmp_path):
    geom = circular_array(8, 0.05)
    spec = SceneSpec(
        [SourceSpec(40.0, "noise", [(0.0, 35.0)]), SourceSpec(-100.0, "noise", [(25.0, 60.0)])],
        geom, duration=60.0, seed=1,
    )
    wav = tmp_path / "long.wav"
    write_wav(wav, render_scene(spec).audio, FS)
    env = dict(os.environ, OMP_NUM_THREADS="1", OPENBLAS_NUM_THREADS="1", MKL_NUM_THREADS="1")
    cmd = [sys.executable, "-m", "spatialdiar.cli", "localize", str(wav), "--provider", "phat",
           "--out", str(tmp_path / "det.csv")]
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    ok = proc.returncode == 0 and elapsed < 10.0
    record(10, "performance", ok, f"60 s of 8-channel audio localized in {elapsed:.2f} s single-threaded (< 10 s)")
    assert proc.returncode == 0, proc.stderr
    assert ok
