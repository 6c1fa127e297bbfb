"""End-to-end identification from one trajectory."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import FourierIdentError, InvalidParameterError, UnderdeterminedError
from .fourier_system import (
    Dictionary,
    FourierSystem,
    SmoothingKernel,
    build_dictionary,
    build_system,
    choose_kernel,
    smooth,
    stack_real_imag,
)
from .grid import Trajectory
from .regions import CoreRegion, MeaningfulRegion, core_region, find_meaningful_region, full_region
from .regression import (
    ScaleSet,
    compute_scales,
    normalize_columns,
    normalized_least_squares,
    subspace_pursuit,
    trim_to_convergence,
)
from .selection import EnergyBreakdown, energy_e1, energy_e2, select_core_region, select_sparsity

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    max_alpha: int = 6
    max_beta: int = 6
    trim_threshold: float = 0.08
    max_sparsity: int = 10
    n_bins: int = 300
    extension: str = "mirror"
    frequencies: str = "signed"
    use_meaningful_region: bool = True
    m_x: int | None = None
    m_t: int | None = None
    p_x: int | None = None
    p_t: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_alpha < 1 or self.max_beta < 1:
            raise InvalidParameterError("dictionary bounds must be >= 1")
        if not 0 < self.trim_threshold < 1:
            raise InvalidParameterError("trim threshold must lie in (0, 1)")
        if self.max_sparsity < 1:
            raise InvalidParameterError("max_sparsity must be >= 1")
        if self.extension not in ("mirror", "periodic"):
            raise InvalidParameterError(f"extension must be 'mirror' or 'periodic', got {self.extension!r}")
        if self.frequencies not in ("signed", "index"):
            raise InvalidParameterError(f"frequencies must be 'signed' or 'index', got {self.frequencies!r}")

    @classmethod
    def from_mapping(cls, mapping) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            if key not in known:
                raise InvalidParameterError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(value, known[key].type)
        return cls(**kwargs)

    def to_dict(self):
        return asdict(self)


def _coerce(value, type_name):
    if value is None or (isinstance(value, str) and value.strip().lower() in ("none", "null", "")):
        return None
    t = str(type_name)
    if t.startswith("bool"):
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if t.startswith("int"):
        return int(value)
    if t.startswith("float"):
        return float(value)
    return str(value).strip() if isinstance(value, str) else value


@dataclass
class FinalResult:
    dictionary: Dictionary
    support: tuple
    coefficients: np.ndarray
    chosen_region: str
    k_star: int
    per_k: list
    region_coefficients: dict
    region_residuals: dict
    diagnostics: dict = field(default_factory=dict)

    def equation(self, digits: int = 4) -> str:
        terms = []
        for l in self.support:
            c = self.coefficients[l]
            terms.append(f"{'-' if c < 0 else '+'} {abs(c):.{digits}g} {self.dictionary.names[l]}")
        body = " ".join(terms).lstrip("+ ") if terms else "0"
        return f"u_t = {body}"


@dataclass
class Workspace:
    """Intermediate state shared by the identification steps."""

    system: FourierSystem
    region: MeaningfulRegion
    kernel: SmoothingKernel
    F_s: np.ndarray
    b_s: np.ndarray
    n_bins: int
    _cores: dict = field(default_factory=dict)
    _stacks: dict = field(default_factory=dict)

    def core(self, tag) -> CoreRegion:
        if tag not in self._cores:
            values = self.b_s if tag == "u_t" else self.F_s[:, tag]
            self._cores[tag] = core_region(values, self.region, tag, self.n_bins)
        return self._cores[tag]

    def stacked(self, core: CoreRegion):
        if core.size == 0:
            return None
        return stack_real_imag(self.F_s, self.b_s, core.real_pos, core.imag_pos)

    def stacked_for(self, tag):
        if tag not in self._stacks:
            self._stacks[tag] = self.stacked(self.core(tag))
        return self._stacks[tag]

    def union_stack(self, support):
        cores = [self.core(l) for l in support]
        if not cores:
            return None
        u = cores[0]
        for c in cores[1:]:
            u = u.union(c)
        return self.stacked(u)


def prepare(traj: Trajectory, config: RunConfig, dictionary: Dictionary | None = None) -> Workspace:
    dictionary = dictionary or build_dictionary(config.max_alpha, config.max_beta)
    system = build_system(traj, dictionary, config.extension, config.frequencies)
    region = find_meaningful_region(system)
    a_star = (region.a_x_star, region.a_t_star)
    if not config.use_meaningful_region:
        region = full_region(system)
    kernel = choose_kernel(
        system.grid.n_x, system.grid.n_t, dictionary.max_alpha, a_star,
        m_x=config.m_x, m_t=config.m_t, p_x=config.p_x, p_t=config.p_t,
    )
    F_s, b_s = smooth(system, kernel, region.indices)
    return Workspace(system, region, kernel, F_s, b_s, config.n_bins)


def _fit_or_none(stacked, scales, support):
    if stacked is None:
        return None
    try:
        return normalized_least_squares(stacked, scales, support)
    except UnderdeterminedError:
        return None


def evaluate_support(ws: Workspace, scales: ScaleSet, support, k: int) -> EnergyBreakdown:
    support = tuple(support)
    entry = EnergyBreakdown(k, support, math.inf, math.inf)
    if not support:
        entry.diagnostics.append("empty support")
        return entry
    entry.e1 = energy_e1(ws.union_stack(support), scales, support)
    c_ut = _fit_or_none(ws.stacked_for("u_t"), scales, support)
    if c_ut is None:
        entry.diagnostics.append("u_t core region too small for this support")
        return entry
    per_region = []
    for l in support:
        c_l = _fit_or_none(ws.stacked_for(l), scales, support)
        if c_l is None:
            entry.diagnostics.append(f"core region of feature {l} too small; left out of e2")
            continue
        per_region.append(c_l)
    entry.e2 = energy_e2(per_region, c_ut, len(support))
    return entry


def identify(traj: Trajectory, config: RunConfig = RunConfig(),
             dictionary: Dictionary | None = None, workspace: Workspace | None = None) -> FinalResult:
    """Recover the sparse right-hand side of ``u_t = sum c_l d^a(u^b)`` from ``traj``."""
    ws = workspace or prepare(traj, config, dictionary)
    dictionary = ws.system.dictionary
    L = len(dictionary)

    stacked_ut = ws.stacked_for("u_t")
    if stacked_ut is None:
        raise UnderdeterminedError("core region of u_t is empty")
    scales = compute_scales(stacked_ut, dictionary)
    A = normalize_columns(stacked_ut.rows)
    y = stacked_ut.rhs / max(np.linalg.norm(stacked_ut.rhs), 1e-300)

    per_k = []
    seen = {}
    k_max = min(config.max_sparsity, L, stacked_ut.n_rows)
    for k in range(1, k_max + 1):
        initial = subspace_pursuit(A, y, k)
        trimmed = trim_to_convergence(stacked_ut, scales, initial, config.trim_threshold, k)
        key = trimmed.indices
        if key not in seen:
            seen[key] = evaluate_support(ws, scales, key, k)
        shared = seen[key]
        entry = EnergyBreakdown(k, key, shared.e1, shared.e2, tuple(trimmed.initial),
                                trimmed.trim_iterations, trimmed.trace, list(shared.diagnostics))
        per_k.append(entry)

    best = select_sparsity(per_k)
    support = best.support
    candidates = [("u_t", stacked_ut)] + [(l, ws.stacked_for(l)) for l in support]
    tag, coeffs, residuals, skipped = select_core_region(candidates, scales, support)
    c_star = coeffs[tag]

    diagnostics = {
        "a_x_star": ws.region.a_x_star,
        "a_t_star": ws.region.a_t_star,
        "region_size": ws.region.size,
        "region_notes": list(ws.region.diagnostics),
        "extended_shape": [ws.system.grid.n_x, ws.system.grid.n_t],
        "kernel": {"m_x": ws.kernel.m_x, "m_t": ws.kernel.m_t, "p_x": ws.kernel.p_x, "p_t": ws.kernel.p_t},
        "core_regions": {
            _tag_name(t, dictionary): {
                "real": int(c.real_pos.size), "imag": int(c.imag_pos.size),
                "threshold": c.threshold, "fallback": c.fallback,
            }
            for t, c in sorted(ws._cores.items(), key=lambda kv: (kv[0] != "u_t", str(kv[0])))
        },
        "scale_notes": list(scales.diagnostics),
        "skipped_regions": [_tag_name(t, dictionary) for t in skipped],
    }
    return FinalResult(
        dictionary=dictionary,
        support=tuple(int(i) for i in np.flatnonzero(c_star)) if np.any(c_star) else tuple(support),
        coefficients=c_star,
        chosen_region=_tag_name(tag, dictionary),
        k_star=best.k,
        per_k=per_k,
        region_coefficients={_tag_name(t, dictionary): c for t, c in coeffs.items()},
        region_residuals={_tag_name(t, dictionary): r for t, r in residuals.items()},
        diagnostics=diagnostics,
    )


def _tag_name(tag, dictionary: Dictionary) -> str:
    return "u_t" if tag == "u_t" else dictionary.names[tag]


class StageError(FourierIdentError):
    """Wraps a failure with the stage it came from."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
