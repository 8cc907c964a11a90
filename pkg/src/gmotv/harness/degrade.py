"""Synthetic degradations: Gaussian blur followed by white Gaussian noise."""

from __future__ import annotations

import math
import zlib

import numpy as np

from ..signal import Kernel

REFERENCES = ("signal-power", "blurred-variance")


def gaussian_kernel(variance: float) -> Kernel:
    """Normalised Gaussian taps on ``[-ceil(3 sigma), ceil(3 sigma)]``, centred."""
    if not variance > 0:
        raise ValueError(f"blur variance must be > 0, got {variance}")
    half = math.ceil(3.0 * math.sqrt(variance))
    x = np.arange(-half, half + 1, dtype=np.float64)
    taps = np.exp(-x ** 2 / (2.0 * variance))
    taps /= taps.sum()
    return Kernel(tuple(taps), half)


def make_rng(seed, *key) -> np.random.Generator:
    """Generator keyed on `seed` plus any strings/numbers in `key`."""
    words = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    words += [zlib.crc32(repr(k).encode()) for k in key]
    return np.random.default_rng(words)


def add_noise(signal, target_db: float, reference: str = "signal-power", seed=0) -> np.ndarray:
    """Add zero-mean Gaussian noise whose realised level is exactly `target_db`.

    ``signal-power`` uses ``sum(y^2) / sum(eta^2)``; ``blurred-variance``
    uses ``var(y) / mean(eta^2)``, with `signal` being the blurred clean
    signal ``h * g``. `seed` is an int or a ready Generator.
    """
    y = np.asarray(signal, dtype=np.float64)
    if reference not in REFERENCES:
        raise ValueError(f"reference must be one of {REFERENCES}")
    if not np.isfinite(target_db):
        raise ValueError("target level must be finite")
    ref = np.mean(y ** 2) if reference == "signal-power" else np.var(y)
    if not ref > 0:
        raise ValueError(f"reference power is zero ({reference}); cannot set a noise level")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    eta = rng.standard_normal(y.size)
    eta -= eta.mean()
    eta *= math.sqrt(ref / 10.0 ** (target_db / 10.0) / np.mean(eta ** 2))
    return y + eta
