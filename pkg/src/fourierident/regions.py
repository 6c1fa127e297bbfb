"""Frequency regions: the low-mode rectangle where the data follow a power-law
decay, and per-feature core regions of high smoothed response."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewModesError
from .fourier_system import FourierSystem, FrequencyIndexMap

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-300
N_BINS = 300


def _cost_terms(y):
    """Decay-fit cost pieces for every admissible split; returns (splits, fit, flat)."""
    y = np.asarray(y, dtype=np.float64)
    M = y.size - 1
    if y.size < 6:
        raise TooFewModesError(f"need at least 6 accumulated modes, got {y.size}")
    ly = np.log(np.maximum(y, LOG_FLOOR))
    lx = np.log(np.arange(1, M + 1, dtype=np.float64))
    ly1 = ly[1:]

    splits = np.arange(2, M - 1)  # a in {2, ..., M-2}
    # least-squares line through (log xi, log y), xi = 1..a, via running sums
    n = splits.astype(np.float64)
    cx, cy = np.cumsum(lx), np.cumsum(ly1)
    cxx, cyy, cxy = np.cumsum(lx * lx), np.cumsum(ly1 * ly1), np.cumsum(lx * ly1)
    i = splits - 1
    sxx = cxx[i] - cx[i] ** 2 / n
    syy = cyy[i] - cy[i] ** 2 / n
    sxy = cxy[i] - cx[i] * cy[i] / n
    fit = np.maximum(syy - sxy**2 / sxx, 0.0)

    # flat line at log(mean y) over the tail xi = a+1..M
    y1 = np.maximum(y[1:], LOG_FLOOR)
    rev = lambda v: np.cumsum(v[::-1])[::-1]  # noqa: E731  rev(v)[j] = sum(v[j:])
    ty, tly, tlyy = rev(y1), rev(ly1), rev(ly1 * ly1)
    j = splits  # position of xi = a+1 in the 1-based tail arrays
    m = (M - splits).astype(np.float64)
    lbar = np.log(np.maximum(ty[j] / m, LOG_FLOOR))
    flat = np.maximum(m * lbar**2 - 2 * lbar * tly[j] + tlyy[j], 0.0)
    return splits, fit, flat


def transition_cost(y):
    """``(splits, cost)`` of the two-piece log-log fit for each candidate split."""
    splits, fit, flat = _cost_terms(y)
    return splits, fit + flat


def fit_transition_mode(y) -> int:
    """Mode where accumulated magnitudes ``y[0..M]`` switch from power-law decay to a flat floor.

    The fit starts at mode 1; the DC entry ``y[0]`` is ignored.  Ties go to the
    smaller split.
    """
    splits, cost = transition_cost(y)
    return int(splits[int(np.argmin(cost))])


def decay_fit_series(y):
    """Per-mode plot data: accumulated response, both fitted lines at the optimum, and cost."""
    y = np.asarray(y, dtype=np.float64)
    splits, cost = transition_cost(y)
    a = int(splits[int(np.argmin(cost))])
    M = y.size - 1
    xi = np.arange(1, M + 1)
    ly = np.log(np.maximum(y[1:], LOG_FLOOR))
    slope, intercept = np.polyfit(np.log(xi[:a]), ly[:a], 1)
    low_line = np.exp(slope * np.log(xi) + intercept)
    tail_level = np.mean(y[a + 1 :])
    full_cost = np.full(M, np.nan)
    full_cost[splits - 1] = cost
    return {
        "mode": xi,
        "response": y[1:],
        "decay_fit": np.where(xi <= a, low_line, np.nan),
        "flat_fit": np.where(xi > a, tail_level, np.nan),
        "cost": full_cost,
        "transition": a,
        "slope": slope,
    }


@dataclass(frozen=True)
class MeaningfulRegion:
    """Rectangle ``[0, a_x*) x [0, a_t*)`` of non-negative modes; ``indices`` sorted."""

    a_x_star: int
    a_t_star: int
    index_map: FrequencyIndexMap
    indices: np.ndarray = field(repr=False)
    diagnostics: tuple = ()

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def positions_of(self, h) -> np.ndarray:
        pos = np.searchsorted(self.indices, h)
        if np.any(pos >= self.indices.size) or np.any(self.indices[np.minimum(pos, self.indices.size - 1)] != h):
            raise IndexError("frequency index outside the region")
        return pos

    @property
    def dc_position(self) -> int:
        return 0  # (0, 0) is always the first index


def rectangle(index_map: FrequencyIndexMap, a_x: int, a_t: int, diagnostics=()) -> MeaningfulRegion:
    xi_x, xi_t = np.meshgrid(np.arange(a_x), np.arange(a_t), indexing="ij")
    h = np.sort(index_map.index(xi_x, xi_t).ravel())
    return MeaningfulRegion(int(a_x), int(a_t), index_map, h, tuple(diagnostics))


def accumulated_responses(system: FourierSystem):
    """``y_x[xi_x] = sum_t |F(U)|`` and ``y_t[xi_t] = sum_x |F(U)|`` on non-negative modes."""
    mag = np.abs(system.u_spectrum)
    n_x, n_t = mag.shape
    y_x = mag.sum(axis=1)[: n_x // 2 + 1]
    y_t = mag.sum(axis=0)[: n_t // 2 + 1]
    return y_x, y_t


def find_meaningful_region(system: FourierSystem) -> MeaningfulRegion:
    y_x, y_t = accumulated_responses(system)
    diags = []
    a_x = fit_transition_mode(y_x)
    a_t = fit_transition_mode(y_t)
    if a_x < 1 or a_t < 1:
        diags.append(f"degenerate transition mode ({a_x}, {a_t}); using 2")
        log.warning(diags[-1])
        a_x, a_t = max(a_x, 2), max(a_t, 2)
    return rectangle(system.map, a_x, a_t, diags)


def full_region(system: FourierSystem) -> MeaningfulRegion:
    """Every frequency mode: the region used when the restriction is disabled."""
    return rectangle(system.map, system.grid.n_x, system.grid.n_t,
                     ("meaningful-region restriction disabled",))


# --- thresholds and core regions ------------------------------------------------


def _elbow_residuals(B: np.ndarray) -> np.ndarray:
    """Summed squared residuals of B against the two chords for each split k (1-based)."""
    n = B.size
    theta = np.arange(1, n + 1, dtype=np.float64)
    ks = np.arange(2, n - 1)  # left chord 1..k, right chord k+1..n
    out = np.empty(ks.size)
    for idx, k in enumerate(ks):
        left = B[0] + (B[k - 1] - B[0]) * (theta[:k] - 1) / (k - 1)
        right = B[k] + (B[-1] - B[k]) * (theta[k:] - (k + 1)) / (n - k - 1)
        out[idx] = np.sum((B[:k] - left) ** 2) + np.sum((B[k:] - right) ** 2)
    return ks, out


def compute_threshold(values, n_bins: int = N_BINS) -> float:
    """Histogram elbow threshold separating the bulk of small responses from the high ones.

    Counts over ``n_bins`` equal-width bins are accumulated into ``B``; the split
    ``k`` minimising the squared residuals of ``B`` against the chords over
    ``1..k`` and ``k+1..n_bins`` gives the threshold ``min + k * width``,
    the left edge of bin ``k + 1``.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("threshold of an empty set")
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo or n_bins < 4:
        return lo
    counts, edges = np.histogram(v, bins=n_bins, range=(lo, hi))
    B = np.cumsum(counts).astype(np.float64)
    ks, res = _elbow_residuals(B)
    k = int(ks[int(np.argmin(res))])
    return float(edges[k])


@dataclass(frozen=True)
class CoreRegion:
    """High-response part of a meaningful region for one feature (or ``"u_t"``).

    ``real_pos``/``imag_pos`` are positions inside the meaningful region's
    index array; ``real_set``/``imag_set`` give the frequency indices.
    """

    feature: object
    threshold: float
    real_pos: np.ndarray = field(repr=False)
    imag_pos: np.ndarray = field(repr=False)
    region: MeaningfulRegion = field(repr=False)
    fallback: bool = False

    @property
    def real_set(self) -> np.ndarray:
        return self.region.indices[self.real_pos]

    @property
    def imag_set(self) -> np.ndarray:
        return self.region.indices[self.imag_pos]

    @property
    def size(self) -> int:
        return int(self.real_pos.size + self.imag_pos.size)

    def union(self, other: "CoreRegion", feature=None) -> "CoreRegion":
        return CoreRegion(
            feature,
            min(self.threshold, other.threshold),
            np.union1d(self.real_pos, other.real_pos),
            np.union1d(self.imag_pos, other.imag_pos),
            self.region,
        )


def core_region(values: np.ndarray, region: MeaningfulRegion, feature="u_t",
                n_bins: int = N_BINS) -> CoreRegion:
    """Core region of one smoothed column (or smoothed ``b``) given over ``region``.

    Real and imaginary magnitudes are pooled for the threshold; the DC mode is
    left out of the statistics but may still enter the core.
    """
    values = np.asarray(values)
    re, im = np.abs(values.real), np.abs(values.imag)
    keep = np.ones(values.size, dtype=bool)
    keep[region.dc_position] = False
    pooled = np.concatenate([re[keep], im[keep]]) if keep.any() else np.concatenate([re, im])
    beta = compute_threshold(pooled, n_bins)
    real_pos = np.flatnonzero(re >= beta)
    imag_pos = np.flatnonzero(im >= beta)
    fallback = False
    if real_pos.size + imag_pos.size == 0:
        top = max(5, math.ceil(0.01 * region.size))
        real_pos = np.sort(np.argsort(-re, kind="stable")[:top])
        imag_pos = np.sort(np.argsort(-im, kind="stable")[:top])
        fallback = True
        log.warning("empty core region for %s; kept the top %d responses per part", feature, top)
    return CoreRegion(feature, beta, real_pos, imag_pos, region, fallback)
