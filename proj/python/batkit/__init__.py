"""Binaural rendering toolkit for microphone-array recordings."""

import json as _json

from ._core import (
    ConfigError,
    DataError,
    NumericalError,
    StftParams,
    builtin_geometry,
    compressed_loss,
    erb_band_edges,
    erb_score,
    istft,
    mac,
    mpdr_weights,
    msi_sdr,
    mw_ilde,
    mw_ipde,
    run_command,
    score_tensor,
    simulate_rir,
    spherical_head_hrtf,
    srp_phat,
    steering_vector,
    stft,
    synth_plane_wave,
    synth_scene as _synth_scene,
)


def synth_scene(scene, alphas=(0.0, 1.0)):
    """Mixture and binaural targets of one scene given as a dict or JSON string."""
    text = scene if isinstance(scene, str) else _json.dumps(scene)
    return _synth_scene(text, list(alphas))


__all__ = [
    "ConfigError",
    "DataError",
    "NumericalError",
    "StftParams",
    "builtin_geometry",
    "compressed_loss",
    "erb_band_edges",
    "erb_score",
    "istft",
    "mac",
    "mpdr_weights",
    "msi_sdr",
    "mw_ilde",
    "mw_ipde",
    "run_command",
    "score_tensor",
    "simulate_rir",
    "spherical_head_hrtf",
    "srp_phat",
    "steering_vector",
    "stft",
    "synth_plane_wave",
    "synth_scene",
]
