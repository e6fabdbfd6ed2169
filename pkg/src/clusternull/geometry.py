"""Two-tier Poisson deployment sampling and typical-cluster extraction.

Units: densities are free parameters but the intended normalization is
lambda_b = 1 with lengths in units of lambda_b^(-1/2); the bounds depend
only on lambda_b/lambda_c and alpha after that scaling.  The observation
window is a disk around the typical user (the origin) holding
`window_cluster_count` clusters on average.  Realizations whose serving
cluster cell reaches the outer 10% annulus of the window are rejected to
suppress edge effects.
"""

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DegenerateRealizationError

_GUARD_FRACTION = 0.9


@dataclass(frozen=True)
class FollowN:
    """Antennas track the interferer count: n_t = N + d_nt."""

    d_nt: int


@dataclass(frozen=True)
class FixedNt:
    """Preset antenna count; nulling applied only when N < n_t."""

    n_t: int


AntennaMode = Union[FollowN, FixedNt]


@dataclass
class SimConfig:
    lambda_b: float = 1.0
    lambda_c: float = 1.0 / 3.0
    alpha: float = 4.0
    snr_db: float = 10.0
    antenna_mode: AntennaMode = field(default_factory=lambda: FollowN(4))
    b_tot: int = 50
    trials: int = 1000
    seed: int = 0
    window_cluster_count: float = 100.0

    def __post_init__(self):
        if self.lambda_c > self.lambda_b:
            raise ValueError("requires lambda_c <= lambda_b")
        if self.alpha <= 2.0:
            raise ValueError("requires alpha > 2 for integrable interference")
        if self.trials < 1:
            raise ValueError("requires trials >= 1")

    @property
    def ratio(self):
        return self.lambda_b / self.lambda_c

    @property
    def inv_snr(self):
        """Noise-to-signal power 1/SNR = sigma^2 / E_s."""
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def window_radius(self):
        return math.sqrt(self.window_cluster_count / (math.pi * self.lambda_c))


@dataclass
class NetworkRealization:
    bs_points: np.ndarray       # (n_b, 2)
    cluster_points: np.ndarray  # (n_c, 2)
    window_radius: float
    bs_to_cluster: np.ndarray   # (n_b,) index of the nearest cluster station


@dataclass
class TypicalCluster:
    serving_bs_index: int
    r0: float                 # user -> serving BS
    r1: float                 # serving BS -> its cluster station
    intra_index: np.ndarray   # other BSs sharing the serving cluster station
    intra_dist: np.ndarray    # their distances to the user, ascending
    r_m: float                # inscribed radius of the cluster cell
    r_M: float                # circumscribed radius of the cluster cell
    out_index: np.ndarray     # every other BS in the window
    out_dist: np.ndarray

    @property
    def n_interferers(self):
        return len(self.intra_index)


def _uniform_disk(rng, count, radius):
    r = radius * np.sqrt(rng.random(count))
    theta = 2.0 * math.pi * rng.random(count)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def sample_realization(cfg, rng):
    """One deployment: Poisson counts on the disk window, uniform positions,
    and the nearest-cluster association map."""
    radius = cfg.window_radius
    area = math.pi * radius * radius
    n_b = rng.poisson(cfg.lambda_b * area)
    n_c = rng.poisson(cfg.lambda_c * area)
    bs = _uniform_disk(rng, n_b, radius)
    clusters = _uniform_disk(rng, n_c, radius)
    if n_b > 0 and n_c > 0:
        d2 = ((bs[:, None, :] - clusters[None, :, :]) ** 2).sum(axis=2)
        assoc = np.argmin(d2, axis=1)
    else:
        assoc = np.zeros(n_b, dtype=int)
    return NetworkRealization(
        bs_points=bs,
        cluster_points=clusters,
        window_radius=radius,
        bs_to_cluster=assoc,
    )


def _clip_halfplane(poly, origin_pt, normal):
    """Sutherland-Hodgman clip of poly to {x : (x - origin_pt) . normal <= 0}."""
    d = (poly - origin_pt) @ normal
    m = len(poly)
    out = []
    for i in range(m):
        j = (i + 1) % m
        di, dj = d[i], d[j]
        if di <= 0.0:
            out.append(poly[i])
        if (di < 0.0) != (dj < 0.0):
            t = di / (di - dj)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.asarray(out) if out else np.empty((0, 2))


def voronoi_cell(center, neighbors, window_radius):
    """Voronoi cell polygon of `center` against `neighbors`, clipped to the
    window bounding square.

    Neighbors are cut in increasing-distance order; a bisector at
    half-distance h cannot intersect the polygon once h exceeds the current
    circumscribed radius, which prunes almost all cuts.
    """
    w = window_radius
    poly = np.array([[-w, -w], [w, -w], [w, w], [-w, w]], dtype=float)
    if len(neighbors) == 0:
        return poly
    delta = neighbors - center
    dist = np.hypot(delta[:, 0], delta[:, 1])
    order = np.argsort(dist)
    r_circ = np.max(np.hypot(*(poly - center).T))
    for k in order:
        if 0.5 * dist[k] >= r_circ:
            break
        mid = center + 0.5 * delta[k]
        poly = _clip_halfplane(poly, mid, delta[k])
        if len(poly) == 0:
            return poly
        r_circ = np.max(np.hypot(*(poly - center).T))
    return poly


def build_typical_cluster(net):
    """Extract the tagged cluster around the typical user at the origin.

    Raises DegenerateRealizationError (caller resamples) when the window is
    empty or the serving cluster's cell reaches the guard annulus.
    """
    n_b = len(net.bs_points)
    n_c = len(net.cluster_points)
    if n_b == 0 or n_c < 2:
        raise DegenerateRealizationError("window lacks base or cluster stations")

    bs_dist = np.hypot(net.bs_points[:, 0], net.bs_points[:, 1])
    serving = int(np.argmin(bs_dist))
    r0 = float(bs_dist[serving])
    c0_idx = int(net.bs_to_cluster[serving])
    c0 = net.cluster_points[c0_idx]
    r1 = float(np.hypot(*(net.bs_points[serving] - c0)))

    same = net.bs_to_cluster == c0_idx
    same[serving] = False
    intra_index = np.flatnonzero(same)
    intra_dist = bs_dist[intra_index]
    order = np.argsort(intra_dist)
    intra_index = intra_index[order]
    intra_dist = intra_dist[order]

    others = np.ones(n_b, dtype=bool)
    others[serving] = False
    others[intra_index] = False
    out_index = np.flatnonzero(others)
    out_dist = bs_dist[out_index]

    neighbors = np.delete(net.cluster_points, c0_idx, axis=0)
    nbr_dist = np.hypot(*(neighbors - c0).T)
    r_m = 0.5 * float(np.min(nbr_dist))

    poly = voronoi_cell(c0, neighbors, net.window_radius)
    if len(poly) == 0:
        raise DegenerateRealizationError("serving cluster cell collapsed")
    vert_from_origin = np.hypot(poly[:, 0], poly[:, 1])
    if np.max(vert_from_origin) > _GUARD_FRACTION * net.window_radius:
        raise DegenerateRealizationError("serving cluster cell in guard annulus")
    r_M = float(np.max(np.hypot(*(poly - c0).T)))

    return TypicalCluster(
        serving_bs_index=serving,
        r0=r0,
        r1=r1,
        intra_index=intra_index,
        intra_dist=intra_dist,
        r_m=r_m,
        r_M=r_M,
        out_index=out_index,
        out_dist=out_dist,
    )


def typical_bs_cluster_counts(net, interior_fraction=0.7):
    """Interferer counts seen by every base station whose cluster station
    lies in the window interior.

    This is the area-biased sampling behind the interferer-count PMF: each
    cluster cell contributes one count per member station, i.e. the count
    of the cell containing a uniformly chosen base station.  (The serving
    cluster of the typical user is NOT this object: the empty disk around
    the user thins its cell, which is exactly why the PMF is validated on
    this construction.)
    """
    if len(net.bs_points) == 0 or len(net.cluster_points) == 0:
        return np.zeros(0, dtype=int)
    members = np.bincount(net.bs_to_cluster, minlength=len(net.cluster_points))
    station_r = np.hypot(*net.cluster_points.T)
    interior = station_r <= interior_fraction * net.window_radius
    peers = members[net.bs_to_cluster] - 1
    return peers[interior[net.bs_to_cluster]]


def sample_typical_cluster(cfg, rng, max_attempts=1000):
    """Sample realizations until one passes the typical-cluster checks.

    Returns (realization, cluster, rejections).
    """
    rejections = 0
    for _ in range(max_attempts):
        net = sample_realization(cfg, rng)
        try:
            return net, build_typical_cluster(net), rejections
        except DegenerateRealizationError:
            rejections += 1
    raise DegenerateRealizationError(
        f"no acceptable realization in {max_attempts} attempts")
