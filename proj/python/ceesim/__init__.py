"""Python access to the ceesim simulator."""

import json

import numpy as np

from . import _ceesim

__all__ = [
    "default_config",
    "mse",
    "psnr",
    "ms_ssim",
    "awgn",
    "fixture",
    "transmit",
    "sweep",
    "stage_latency",
    "run_service",
    "compare",
    "benchmark_fit",
]


def _text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return json.dumps(config)


def default_config():
    """Reference run configuration as a dict."""
    return json.loads(_ceesim.default_config())


def mse(x, y):
    return _ceesim.mse(x, y)


def psnr(x, y):
    return _ceesim.psnr(x, y)


def ms_ssim(x, y):
    return _ceesim.ms_ssim(x, y)


def awgn(symbols, snr_db, seed=1, stream=0):
    return _ceesim.awgn(np.asarray(symbols, dtype=float), snr_db, seed, stream)


def fixture(config=None):
    """Procedural user clip (T, H, W, 3), clean plate and background."""
    return _ceesim.fixture(_text(config))


def transmit(video, chain, snr_db, config=None):
    return _ceesim.transmit(video, chain, snr_db, _text(config))


def sweep(video, snr_db, config=None):
    """Rows of (snr_db, chain, psnr, ms_ssim) for both chains."""
    lines = _ceesim.sweep_csv(video, list(snr_db), _text(config)).strip().splitlines()[1:]
    rows = []
    for line in lines:
        snr, chain, p, s = line.split(",")
        rows.append((float(snr), chain, float(p), float(s)))
    return rows


def stage_latency(payload_bits, throughput, flops, capacity):
    return _ceesim.stage_latency(payload_bits, throughput, flops, capacity)


def run_service(config=None):
    """ServiceReport as a dict."""
    return json.loads(_ceesim.run_service(_text(config)))


def compare(config=None):
    return json.loads(_ceesim.compare(_text(config)))


def benchmark_fit(seed=5):
    return _ceesim.benchmark_fit(seed)
