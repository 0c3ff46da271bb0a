import numpy as np
import pytest

import ceesim


@pytest.fixture(scope="module")
def small():
    cfg = ceesim.default_config()
    cfg["fixture"]["width"] = 64
    cfg["fixture"]["height"] = 64
    cfg["vsr"]["enabled"] = False
    return cfg


def test_metrics():
    a = np.zeros((16, 16, 3))
    b = np.ones((16, 16, 3))
    assert ceesim.mse(a, b) == pytest.approx(1.0)
    assert ceesim.psnr(a, b) == pytest.approx(0.0, abs=1e-9)
    rng = np.random.default_rng(0)
    x = rng.random((176, 176, 3))
    assert ceesim.ms_ssim(x, x) == pytest.approx(1.0)


def test_awgn_is_seeded():
    s = np.ones(1000)
    assert np.array_equal(ceesim.awgn(s, 0.0, seed=3), ceesim.awgn(s, 0.0, seed=3))
    assert np.var(ceesim.awgn(s, 0.0) - s) == pytest.approx(1.0, rel=0.15)


def test_stage_latency():
    assert ceesim.stage_latency(8e6, 1e6, 0.0, 1.0) == pytest.approx(8.0)
    with pytest.raises(ValueError):
        ceesim.stage_latency(1.0, 0.0, 0.0, 1.0)


def test_transmit_and_sweep(small):
    clip = ceesim.fixture(small)["user"]
    assert clip.shape == (8, 64, 64, 3)
    out = ceesim.transmit(clip, "semantic", 10.0, small)
    assert out["video"].shape == clip.shape
    assert out["psnr"] > 10.0
    rows = ceesim.sweep(clip, [0.0, 20.0], small)
    assert [r[1] for r in rows] == ["semantic", "classical", "semantic", "classical"]


def test_service_report(small):
    rep = ceesim.run_service(small)
    assert rep["completed"]
    names = [s["name"] for s in rep["stages"]]
    assert names[0] == "upload_user_video" and names[-1] == "download_3d_video"
    total = sum(s["delay_seconds"] for s in rep["stages"])
    assert rep["totals"]["delay_seconds"] == pytest.approx(total, rel=1e-12)
    assert ceesim.run_service(small) == rep
