"""Small shared helpers: unit conversions, angle wrapping, RNG substreams."""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi

# Purpose tags for RNG substream derivation.  Every stochastic code path in
# the package draws from a Generator obtained through substream(), so that a
# single 64-bit seed reproduces a whole experiment regardless of evaluation
# order (trials can run in any order or in parallel without perturbing each
# other's draws).
_PURPOSES = {
    "channel": 0,
    "sweep": 1,
    "track": 2,
    "train": 3,
    "train-noise": 4,
    "scheme": 5,
    "selftest": 6,
}


def db_to_linear(db: float) -> float:
    """Convert a dB quantity to linear scale (10^(db/10))."""
    return float(10.0 ** (db / 10.0))


def linear_to_db(x: float) -> float:
    """Convert a positive linear quantity to dB."""
    if x <= 0:
        raise ValueError("linear quantity must be positive")
    return float(10.0 * np.log10(x))


def dbm_to_watt(dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return float(10.0 ** ((dbm - 30.0) / 10.0))


def wrap_angle(angle):
    """Wrap an angle (scalar or array, radians) to the interval [-pi, pi)."""
    wrapped = np.mod(np.asarray(angle) + np.pi, TWO_PI) - np.pi
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped


def substream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Derive an independent, reproducible RNG stream.

    Parameters
    ----------
    seed : master seed (any 64-bit integer).
    purpose : one of the registered purpose tags; each tag owns a disjoint
        family of streams.
    indices : further non-negative integers (trial number, frame number,
        sample number, ...) selecting one stream within the family.
    """
    try:
        tag = _PURPOSES[purpose]
    except KeyError:
        raise ValueError(f"unknown substream purpose {purpose!r}") from None
    entropy = int(seed) & 0xFFFFFFFFFFFFFFFF
    key = (tag,) + tuple(int(i) for i in indices)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=entropy, spawn_key=key)))
