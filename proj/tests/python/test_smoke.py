import json

import numpy as np
import pytest

import batkit


def test_stft_roundtrip():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 4000))
    spec = batkit.stft(x)
    assert spec.shape[0] == 2 and spec.shape[2] == 257
    y = batkit.istft(spec, x.shape[1])
    assert np.max(np.abs(y - x)) < 1e-9


def test_geometries_and_steering():
    g1 = batkit.builtin_geometry("G1")
    g4 = batkit.builtin_geometry("G4")
    assert g4["positions"].shape == (3, 3)
    a = batkit.steering_vector("G1", 30.0, 1000.0)
    assert a.shape == (g1["positions"].shape[0] - 1,)
    assert np.allclose(np.abs(a), 1.0)
    with pytest.raises(batkit.ConfigError):
        batkit.builtin_geometry("G5")


def test_score_finds_plane_wave_direction():
    rng = np.random.default_rng(2)
    mix = batkit.synth_plane_wave("G1", 135.0, rng.standard_normal(8000))
    s = batkit.score_tensor(batkit.stft(mix), "G1")
    band = s[:, 7:49, :]
    assert np.mean(np.argmax(band, axis=2) == 27) > 0.95
    e = batkit.erb_score(s, 32)
    assert e.shape == (s.shape[0], 32, 72)
    assert batkit.mac(e, e) == pytest.approx(1.0)
    with pytest.raises(batkit.DataError):
        batkit.mac(e, s)


def test_baselines():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    R = A @ A.conj().T + np.eye(4)
    a = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    w = batkit.mpdr_weights(R, a)
    assert abs(np.vdot(w, a) - 1.0) < 1e-12
    mix = batkit.synth_plane_wave("G1", 90.0, rng.standard_normal(8000))
    index, azimuth, power = batkit.srp_phat(batkit.stft(mix), "G1")
    assert abs(azimuth - 90.0) <= 5.0
    assert len(power) == 72


def test_rir_and_hrtf():
    h = batkit.simulate_rir([2.0, 2.5, 1.5], [1.0, 2.5, 1.5], max_order=0, length_s=0.05)
    assert np.argmax(np.abs(h)) == round(1.0 / 343.0 * 16000)
    az, left, right = batkit.spherical_head_hrtf(72)
    assert len(az) == 72 and left.shape == right.shape


def test_scene_metrics_and_loss():
    scene = {
        "id": "py",
        "seed": 4,
        "room": {"max_order": 1, "length_s": 0.05},
        "trajectory": [{"azimuth_deg": 60.0, "radius_m": 1.2, "duration_s": 0.5}],
        "ambient_directions": 8,
    }
    out = batkit.synth_scene(scene, [0.0, 0.5, 1.0])
    assert out["mixture"].shape == (batkit.builtin_geometry("G1")["positions"].shape[0], 8000)
    t = out["targets"]
    assert np.max(np.abs(t[0.5] - 0.5 * (t[0.0] + t[1.0]))) < 1e-9
    Y = batkit.stft(t[0.0])
    assert batkit.mw_ipde(Y, Y) == 0.0
    assert batkit.mw_ilde(Y, Y) == 0.0
    assert batkit.msi_sdr(t[0.0], 3.0 * t[0.0]) == float("inf")
    assert batkit.compressed_loss(Y, Y) == 0.0
    with pytest.raises(batkit.ConfigError):
        batkit.synth_scene(json.dumps({**scene, "typo": 1}))


def test_run_command(tmp_path):
    cfg = {
        "version": 1,
        "seed": 1,
        "output_dir": str(tmp_path / "out"),
        "methods": ["passthrough"],
        "scenes": [
            {
                "id": "s0",
                "seed": 1,
                "room": {"max_order": 1, "length_s": 0.05},
                "trajectory": [{"azimuth_deg": 30.0, "radius_m": 1.2, "duration_s": 0.3}],
                "ambient_directions": 8,
            }
        ],
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    with pytest.raises(batkit.DataError):
        batkit.run_command("eval", str(path))
    for verb in ("synth", "render", "eval"):
        batkit.run_command(verb, str(path))
    assert (tmp_path / "out" / "eval" / "report.csv").exists()
