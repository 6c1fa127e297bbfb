"""Discrete Fourier feature system ``F c = b`` and its smoothed, stacked forms.

Column ``l`` of ``F`` is the spectral derivative ``(2*pi*i*k/X)**alpha_l`` times
the 2-D DFT of ``u**beta_l`` scaled by ``dx*dt``; ``b`` is the same for ``u_t``
with the temporal multiplier ``2*pi*i*k_t/T``.  Rows are indexed by
``h = xi_x * N_t + xi_t``.

Full ``H x L`` matrices are large for realistic grids, so a :class:`FourierSystem`
keeps one spectrum per monomial power and materialises rows on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DynamicRangeError, EmptySystemError, KernelTooNarrowError
from .grid import Grid, Trajectory, mirror_even_array, mirror_odd_array

# |U|**beta beyond this is treated as overflow
MAX_POWER_MAGNITUDE = 1e300


def feature_name(alpha: int, beta: int) -> str:
    if beta == 0:
        return "1"
    base = "u" if beta == 1 else f"(u^{beta})"
    if alpha == 0:
        return "u" if beta == 1 else f"u^{beta}"
    return f"{base}_{'x' * alpha}"


@dataclass(frozen=True)
class Dictionary:
    """Ordered catalog of candidate terms ``d^alpha/dx^alpha (u^beta)``."""

    entries: tuple
    names: tuple = ()

    def __post_init__(self):
        entries = tuple((int(a), int(b)) for a, b in self.entries)
        if len(set(entries)) != len(entries):
            raise ValueError("dictionary entries must be unique")
        for a, b in entries:
            if a < 0 or b < 0:
                raise ValueError(f"negative order or power in entry {(a, b)}")
            if b == 0 and a != 0:
                raise ValueError("beta = 0 is only allowed for the constant feature (0, 0)")
        object.__setattr__(self, "entries", entries)
        if not self.names:
            object.__setattr__(self, "names", tuple(feature_name(a, b) for a, b in entries))
        object.__setattr__(self, "_lookup", {e: i for i, e in enumerate(entries)})

    def __len__(self):
        return len(self.entries)

    def index(self, alpha: int, beta: int) -> int:
        return self._lookup[(alpha, beta)]

    def get(self, alpha: int, beta: int, default=None):
        return self._lookup.get((alpha, beta), default)

    @property
    def max_alpha(self) -> int:
        return max(a for a, _ in self.entries)

    @property
    def max_beta(self) -> int:
        return max(b for _, b in self.entries)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for a, _ in self.entries])

    @property
    def betas(self) -> np.ndarray:
        return np.array([b for _, b in self.entries])


def build_dictionary(max_alpha: int = 6, max_beta: int = 6) -> Dictionary:
    """Constant term followed by every ``(alpha, beta)``, beta-major."""
    if max_alpha < 1 or max_beta < 1:
        raise ValueError("max_alpha and max_beta must be at least 1")
    entries = [(0, 0)]
    entries += [(a, b) for b in range(1, max_beta + 1) for a in range(max_alpha + 1)]
    return Dictionary(tuple(entries))


@dataclass(frozen=True)
class FrequencyIndexMap:
    n_x: int
    n_t: int

    @property
    def size(self) -> int:
        return self.n_x * self.n_t

    def index(self, xi_x, xi_t):
        return np.asarray(xi_x) * self.n_t + np.asarray(xi_t)

    def modes(self, h):
        return np.divmod(np.asarray(h), self.n_t)


def signed_modes(n: int) -> np.ndarray:
    """Integer wavenumbers ``0, 1, ..., -1`` in FFT order."""
    return np.fft.fftfreq(n, d=1.0 / n)


FREQUENCY_CONVENTIONS = ("signed", "index")


def derivative_multiplier(n: int, period: float, order: int, frequencies: str = "signed") -> np.ndarray:
    """``(2*pi*i*k/period)**order`` per FFT bin.

    ``"signed"`` uses the wavenumbers ``0, 1, ..., -1``; the Nyquist bin of an
    even-length axis has no signed counterpart and is zeroed for odd orders so
    real data keep a conjugate-symmetric spectrum.  ``"index"`` uses the bin
    index ``0..n-1`` itself, which agrees with ``"signed"`` below ``n/2`` but
    assigns large multipliers to the negative-frequency half.
    """
    if frequencies == "index":
        return (2j * np.pi * np.arange(n) / period) ** order + 0j
    if frequencies != "signed":
        raise ValueError(f"unknown frequency convention {frequencies!r}")
    k = signed_modes(n)
    mult = (2j * np.pi * k / period) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[n // 2] = 0.0
    return mult


@dataclass(frozen=True)
class FourierSystem:
    """Spectra needed to evaluate any row of ``F`` and ``b``.

    ``grid`` is the grid of the (possibly time-extended) data, so ``grid.X`` and
    ``grid.T`` are the periods used by the derivative multipliers.
    """

    grid: Grid
    dictionary: Dictionary
    spectra: dict = field(repr=False)  # beta -> dx*dt*DFT2(f_beta), shape (N_x, N_t)
    u_spectrum: np.ndarray = field(repr=False)  # dx*dt*DFT2(extended u)
    extension: str = "mirror"
    frequencies: str = "signed"

    @property
    def map(self) -> FrequencyIndexMap:
        return FrequencyIndexMap(self.grid.n_x, self.grid.n_t)

    @property
    def shape(self):
        return (self.map.size, len(self.dictionary))

    def _x_multipliers(self):
        n, X = self.grid.n_x, self.grid.X
        return {a: derivative_multiplier(n, X, a, self.frequencies) for a in set(self.dictionary.alphas.tolist())}

    def rows(self, h) -> np.ndarray:
        """Rows ``h`` of ``F`` as a complex ``len(h) x L`` array."""
        h = np.asarray(h, dtype=np.int64)
        xi_x, xi_t = self.map.modes(h)
        mults = self._x_multipliers()
        out = np.empty((h.size, len(self.dictionary)), dtype=np.complex128)
        for l, (a, b) in enumerate(self.dictionary.entries):
            out[:, l] = mults[a][xi_x] * self.spectra[b][xi_x, xi_t]
        return out

    def rhs(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=np.int64)
        xi_x, xi_t = self.map.modes(h)
        mult_t = derivative_multiplier(self.grid.n_t, self.grid.T, 1, self.frequencies)
        return mult_t[xi_t] * self.u_spectrum[xi_x, xi_t]

    @property
    def F(self) -> np.ndarray:
        """Full ``H x L`` matrix; only sensible on small grids."""
        return self.rows(np.arange(self.map.size))

    @property
    def b(self) -> np.ndarray:
        return self.rhs(np.arange(self.map.size))


def _odd_feature_extension(values: np.ndarray) -> np.ndarray:
    """Odd reflection with the two reflection points set to zero.

    The time derivative of an even extension jumps at t = 0 and t = T, where
    its Fourier series takes the midpoint value 0.  Zeroing those samples keeps
    the feature columns consistent with the derivative multiplier applied to
    the even-extended data (the DC row of ``b`` is exactly zero).
    """
    ext = mirror_odd_array(values)
    ext[:, 0] = 0.0
    ext[:, values.shape[1] - 1] = 0.0
    return ext


def build_system(traj: Trajectory, dictionary: Dictionary, extension: str = "mirror",
                 frequencies: str = "signed") -> FourierSystem:
    """FFT-built Fourier system of ``traj`` over ``dictionary``.

    With ``extension="mirror"`` the data are even-reflected in time for ``u_t``
    and every power ``u**beta`` is odd-reflected after powering (zero at the
    reflection points); with ``"periodic"`` the samples are used as they are.
    ``frequencies`` picks the derivative multiplier convention, see
    :func:`derivative_multiplier`.
    """
    if extension not in ("mirror", "periodic"):
        raise ValueError(f"unknown extension mode {extension!r}")
    if frequencies not in FREQUENCY_CONVENTIONS:
        raise ValueError(f"unknown frequency convention {frequencies!r}")
    U = traj.values
    g = traj.grid
    betas = sorted(set(dictionary.betas.tolist()))
    peak = float(np.max(np.abs(U))) if U.size else 0.0
    beta_max = max(betas)
    if peak > 0 and beta_max * math.log10(peak) > math.log10(MAX_POWER_MAGNITUDE):
        raise DynamicRangeError(
            f"max|U|**{beta_max} = 10^{beta_max * math.log10(peak):.0f} overflows; "
            "rescale the data (e.g. divide by max|U|) before identification"
        )

    if extension == "mirror":
        u_ext = mirror_even_array(U)
        power_ext = lambda p: _odd_feature_extension(U**p)  # noqa: E731
    else:
        u_ext = U
        power_ext = lambda p: U**p  # noqa: E731
    n_x, n_t = u_ext.shape
    grid = Grid(n_x, n_t, g.dx, g.dt, g.x0, g.t0)
    scale = g.dx * g.dt

    spectra = {}
    for b in betas:
        if b == 0:
            # constant feature: X*T at DC only
            spec = np.zeros((n_x, n_t), dtype=np.complex128)
            spec[0, 0] = n_x * n_t * scale
        else:
            spec = np.fft.fft2(power_ext(b)) * scale
        spectra[b] = spec
    u_spec = spectra[1] if (extension == "periodic" and 1 in spectra) else np.fft.fft2(u_ext) * scale
    return FourierSystem(grid, dictionary, spectra, u_spec, extension, frequencies)


# --- smoothing ---------------------------------------------------------------


def _bump(n: int, m: int, p: int) -> np.ndarray:
    """``(1 - (d/m)**2)**p`` on a periodic axis, d the signed sample offset."""
    d = signed_modes(n)
    w = np.clip(1.0 - (d / m) ** 2, 0.0, None) ** p
    return w


@dataclass(frozen=True)
class SmoothingKernel:
    m_x: int
    m_t: int
    p_x: int
    p_t: int
    n_x: int
    n_t: int

    def __post_init__(self):
        if min(self.m_x, self.m_t) < 1:
            raise KernelTooNarrowError(f"kernel half-widths must be >= 1, got ({self.m_x}, {self.m_t})")
        if min(self.p_x, self.p_t) < 1:
            raise ValueError("kernel powers must be >= 1")

    def physical(self) -> np.ndarray:
        """Unit-mass kernel samples on the periodic data grid."""
        phi = np.outer(_bump(self.n_x, self.m_x, self.p_x), _bump(self.n_t, self.m_t, self.p_t))
        return phi / phi.sum()

    def phi_hat_x(self) -> np.ndarray:
        w = _bump(self.n_x, self.m_x, self.p_x)
        return np.fft.fft(w).real / w.sum()

    def phi_hat_t(self) -> np.ndarray:
        w = _bump(self.n_t, self.m_t, self.p_t)
        return np.fft.fft(w).real / w.sum()

    @property
    def phi_hat(self) -> np.ndarray:
        """2-D DFT of the kernel normalised to 1 at DC; real since the kernel is even."""
        return np.outer(self.phi_hat_x(), self.phi_hat_t())

    def at(self, h, index_map: FrequencyIndexMap) -> np.ndarray:
        xi_x, xi_t = index_map.modes(np.asarray(h, dtype=np.int64))
        return self.phi_hat_x()[xi_x] * self.phi_hat_t()[xi_t]


# Gaussian-matched spectral decay target at the transition mode
KERNEL_DECAY = 1e-4


def required_half_width(n: int, transition_mode: int, power: int, decay: float = KERNEL_DECAY) -> int:
    """Smallest half-width whose variance-matched Gaussian has decayed to ``decay`` at the mode.

    The bump ``(1 - (d/m)**2)**p`` has variance ``m**2 / (2p + 3)`` in samples.
    """
    a = max(int(transition_mode), 1)
    sigma = n * math.sqrt(math.log(1.0 / decay) / 2.0) / (math.pi * a)
    return int(math.ceil(sigma * math.sqrt(2 * power + 3)))


def choose_kernel(n_x: int, n_t: int, max_alpha: int, transition_modes, *,
                  m_x=None, m_t=None, p_x=None, p_t=None) -> SmoothingKernel:
    """Pick kernel widths/powers from the transition modes ``(a_x*, a_t*)``.

    ``p_x = max_alpha + 2`` and ``p_t = 3``.  Each half-width is the smallest one
    meeting the decay target, but never wider than ``N // 20`` samples; when the
    target cannot be met within that bound the bound is used.  Explicit keyword
    values override the rule.
    """
    a_x, a_t = transition_modes
    p_x = p_x if p_x is not None else max_alpha + 2
    p_t = p_t if p_t is not None else 3
    if m_x is None:
        m_x = min(required_half_width(n_x, a_x, p_x), n_x // 20)
    if m_t is None:
        m_t = min(required_half_width(n_t, a_t, p_t), n_t // 20)
    if m_x < 1 or m_t < 1:
        raise KernelTooNarrowError(
            f"selected half-widths ({m_x}, {m_t}) on a {n_x}x{n_t} grid; "
            "the grid is too small for the default rule, pass explicit widths"
        )
    return SmoothingKernel(int(m_x), int(m_t), int(p_x), int(p_t), n_x, n_t)


def smooth(system: FourierSystem, kernel: SmoothingKernel, h):
    """Smoothed rows ``S(F)_h`` and ``S(b)_h``: both multiplied by the kernel transform."""
    if kernel.n_x != system.grid.n_x or kernel.n_t != system.grid.n_t:
        raise ValueError("kernel grid does not match the system grid")
    h = np.asarray(h, dtype=np.int64)
    if h.size and (h.min() < 0 or h.max() >= system.map.size):
        raise IndexError("region index out of range for this system")
    w = kernel.at(h, system.map)
    return system.rows(h) * w[:, None], system.rhs(h) * w


# --- stacking ------------------------------------------------------------------


@dataclass(frozen=True)
class StackedSystem:
    """Real parts on the real index set stacked above imaginary parts on the imaginary set."""

    rows: np.ndarray
    rhs: np.ndarray
    n_real: int
    n_imag: int

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


def stack_real_imag(F_s: np.ndarray, b_s: np.ndarray, real_pos, imag_pos) -> StackedSystem:
    """Stack ``Re`` rows at positions ``real_pos`` over ``Im`` rows at ``imag_pos``.

    Positions index into the first axis of the (already region-restricted)
    smoothed arrays.
    """
    real_pos = np.asarray(real_pos, dtype=np.int64)
    imag_pos = np.asarray(imag_pos, dtype=np.int64)
    if real_pos.size + imag_pos.size == 0:
        raise EmptySystemError("cannot stack an empty region")
    rows = np.vstack([F_s[real_pos].real, F_s[imag_pos].imag])
    rhs = np.concatenate([b_s[real_pos].real, b_s[imag_pos].imag])
    return StackedSystem(rows, rhs, real_pos.size, imag_pos.size)
