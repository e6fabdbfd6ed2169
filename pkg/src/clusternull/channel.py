"""Fading and path-loss primitives."""

from dataclasses import dataclass

import numpy as np


@dataclass
class ChannelSet:
    """One trial's fading draws for the typical user.

    h0        : desired channel, length n_t, entries CN(0, 1).
    g_intra   : (n, n_t) intra-cluster interfering channels g_{0,l}.
    out_fading: effective fading power per out-of-cluster interferer.
                Each distant beamformer is independent of its channel to
                the typical user, so |g* f|^2 is exactly Exp(1); sampling
                the scalar directly avoids materializing the vectors.
    """

    h0: np.ndarray
    g_intra: np.ndarray
    out_fading: np.ndarray


def path_loss(r, alpha):
    """Bounded path-loss law L(r) = (1 + r)^alpha; received power is 1/L."""
    return (1.0 + np.asarray(r, dtype=float)) ** alpha


def complex_gaussian(rng, *shape):
    """i.i.d. CN(0, 1) entries (unit variance split across re/im)."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def sample_channels(n_t, n, n_out, rng):
    if n_t < 1:
        raise ValueError(f"n_t must be >= 1, got {n_t}")
    h0 = complex_gaussian(rng, n_t)
    g_intra = complex_gaussian(rng, n, n_t)
    out_fading = rng.exponential(1.0, size=n_out)
    return ChannelSet(h0=h0, g_intra=g_intra, out_fading=out_fading)
