"""Multichannel DOA estimation and spatial diarization toolkit.

SRP-style localization from summed DP-IPD fields with iterative
detection-and-removal, DOA feature matrices for diarization models,
pseudo-DOA simulation, block-wise streaming and RTTM/DER scoring.
"""

from .evaluation import DerResult, Segment, SpeakerSegments, compute_der, parse_rttm, write_rttm
from .features import DoaMatrix, build_doa_matrix, fuse_additive, interpolate_nearest
from .geometry import (
    ArrayGeometry,
    AzimuthGrid,
    DoaAngle,
    DpIpdField,
    circular_array,
    dp_ipd,
    quantize_azimuth,
    steering_delay,
)
from .localizer import (
    IdlConfig,
    SourceDetection,
    SpatialSpectrum,
    SteeringTable,
    detect_peak,
    estimate_weight,
    idl_localize,
    remove_source,
    srp_spectrum,
)
from .pipeline import LocalizerSettings, diarize, localize, localize_online
from .providers import PhatProvider, SmoothingState, SourceActivity, oracle_summed_dpipd, phat_summed_dpipd
from .pseudo_doa import PseudoDoaConfig, VadTimeline, simulate_pseudo_doa
from .scene import SceneSpec, SourceSpec, render_scene
from .stft import StftConfig, StftFrames, stft
from .streaming import BlockConfig, BlockStreamer, stream_blocks
from .tracker import Track, TrackerConfig, associate_detections, tracks_to_segments

__version__ = "0.1.0"
