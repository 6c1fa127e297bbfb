"""Sparsity and core-region selection from core-region energies."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IdentificationFailedError, UnderdeterminedError
from .fourier_system import StackedSystem
from .regression import ScaleSet, normalized_least_squares


def relative_residual(stacked: StackedSystem, c: np.ndarray) -> float:
    denom = np.linalg.norm(stacked.rhs)
    if denom == 0:
        return math.inf
    return float(np.linalg.norm(stacked.rows @ c - stacked.rhs) / denom)


def energy_e1(stacked_union: StackedSystem | None, scales: ScaleSet, support) -> float:
    """Relative residual of the error-normalised fit on the union of the support's core regions."""
    if stacked_union is None or len(support) == 0 or stacked_union.n_rows == 0:
        return math.inf
    try:
        c = normalized_least_squares(stacked_union, scales, support)
    except UnderdeterminedError:
        return math.inf
    return relative_residual(stacked_union, c)


def energy_e2(region_coefficients, c_ut: np.ndarray, support_size: int) -> float:
    """Spread of per-core-region coefficient vectors, relative to the ``u_t`` fit.

    Sums ``||c_l - c_l'||`` over ordered pairs ``l != l'``, divided by
    ``|support|**2`` and by ``||c_ut||``.
    """
    if support_size <= 1:
        return 0.0
    norm = np.linalg.norm(c_ut)
    if norm == 0:
        return math.inf
    vecs = list(region_coefficients)
    total = sum(np.linalg.norm(a - b) for a, b in itertools.permutations(vecs, 2))
    return float(total / support_size**2 / norm)


@dataclass
class EnergyBreakdown:
    k: int
    support: tuple
    e1: float
    e2: float
    initial_support: tuple = ()
    trim_iterations: int = 0
    trace: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.e1 + self.e2


def select_sparsity(per_k) -> EnergyBreakdown:
    """Entry with the smallest finite ``e1 + e2``; ties go to the smaller ``k``."""
    best = None
    for entry in per_k:
        if not math.isfinite(entry.total):
            continue
        if best is None or entry.total < best.total or (entry.total == best.total and entry.k < best.k):
            best = entry
    if best is None:
        raise IdentificationFailedError("no sparsity level produced a finite energy")
    return best


def select_core_region(candidates, scales: ScaleSet, support):
    """Fit on each candidate region and keep the one with the smallest relative residual.

    ``candidates`` is an ordered sequence of ``(tag, StackedSystem)``; order
    decides ties, so the ``u_t`` region goes first.  Returns
    ``(best_tag, {tag: coefficients}, {tag: residual}, skipped_tags)``.
    """
    coeffs, residuals, skipped = {}, {}, []
    best_tag, best_res = None, math.inf
    for tag, stacked in candidates:
        if stacked is None or stacked.n_rows < len(support):
            skipped.append(tag)
            continue
        c = normalized_least_squares(stacked, scales, support)
        r = relative_residual(stacked, c)
        coeffs[tag], residuals[tag] = c, r
        if r < best_res:
            best_tag, best_res = tag, r
    if best_tag is None:
        raise IdentificationFailedError("every candidate core region was empty or too small")
    return best_tag, coeffs, residuals, skipped
