"""Control-mode states and the momentum distributions they produce.

After the hybrid gate ``exp(i x (x) H tau / x0)`` acts on a control mode
with position wavefunction ``G(x)`` and a maximally mixed register, the
rescaled momentum ``p_E = p * x0 / tau`` is distributed as a Gaussian
mixture: one component per eigenphase, weighted by ``c_m / 2**n``.

Everything here is expressed in ``p_E`` units with hbar = 1.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.special import erf

from .spectrum import PhaseSpectrum

# Larger squeezing is numerically meaningless in double precision.
MAX_SQUEEZING = 1e9

DEFAULT_CHUNK = 1 << 16
MIN_POINTS_PER_SIGMA = 8
MIN_GRID_POINTS = 1 << 12


@dataclass(frozen=True)
class QumodeWavefunction:
    """Initial control-mode state: a squeezed vacuum or a coherent state.

    ``s0`` is the squeezing factor (1 for a coherent state), ``alpha`` the
    coherent amplitude (0 for a squeezed state) and ``x0`` the oscillator
    length scale.
    """

    kind: str
    s0: float = 1.0
    alpha: complex = 0j
    x0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("squeezed", "coherent"):
            raise ValueError(f"unknown wavefunction kind {self.kind!r}")
        if not self.x0 > 0:
            raise ValueError("x0 must be positive")
        if not 1.0 <= self.s0 <= MAX_SQUEEZING:
            raise ValueError(f"s0 must lie in [1, {MAX_SQUEEZING:g}], got {self.s0}")
        if self.kind == "coherent" and self.s0 != 1.0:
            raise ValueError("coherent states have s0 = 1")

    @classmethod
    def squeezed(cls, s0: float, x0: float = 1.0) -> "QumodeWavefunction":
        return cls("squeezed", s0=float(s0), x0=float(x0))

    @classmethod
    def coherent(cls, alpha: complex, x0: float = 1.0) -> "QumodeWavefunction":
        return cls("coherent", alpha=complex(alpha), x0=float(x0))

    @property
    def width(self) -> float:
        """Position-space width ``s = s0 * x0``."""
        return self.s0 * self.x0

    @property
    def center(self) -> float:
        return self.alpha.real * self.x0 if self.kind == "coherent" else 0.0

    def position_amplitude(self, x) -> np.ndarray:
        """``G(x)``, normalised so that the integral of ``|G|**2`` is 1."""
        x = np.asarray(x, dtype=float)
        if self.kind == "squeezed":
            s = self.width
            return (np.exp(-x**2 / (2 * s * s)) / (math.sqrt(s) * math.pi**0.25)).astype(complex)
        a, x0 = self.alpha, self.x0
        return (
            (1.0 / (math.pi * x0 * x0)) ** 0.25
            * np.exp(-((x - a.real * x0) ** 2) / (2 * x0 * x0))
            * np.exp(1j * a.imag * x / x0)
            * np.exp(-0.5j * a.real * a.imag)
        )


@dataclass(frozen=True)
class GaussianMixture:
    """Equal-width Gaussian mixture over ``p_E``."""

    means: np.ndarray
    weights: np.ndarray
    sigma: float
    s0_effective: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if means.shape != weights.shape or means.ndim != 1 or means.size == 0:
            raise ValueError("means and weights must be equal-length nonempty vectors")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.means.size

    def characteristic(self, t: float = 1.0) -> complex:
        """``E[exp(i t p_E)]`` in closed form."""
        damp = math.exp(-0.5 * (self.sigma * t) ** 2)
        return complex(damp * np.sum(self.weights * np.exp(1j * t * self.means)))

    def interval_mass(self, lo, hi) -> np.ndarray:
        """Probability of ``lo <= p_E <= hi``, vectorised over interval arrays."""
        lo = np.asarray(lo, dtype=float)[..., None]
        hi = np.asarray(hi, dtype=float)[..., None]
        scale = self.sigma * math.sqrt(2.0)
        per = 0.5 * (erf((hi - self.means) / scale) - erf((lo - self.means) / scale))
        return per @ self.weights

    def span(self, n_sigma: float = 10.0) -> tuple[float, float]:
        return (float(self.means.min() - n_sigma * self.sigma),
                float(self.means.max() + n_sigma * self.sigma))


def momentum_distribution(
    spec: PhaseSpectrum, psi: QumodeWavefunction, tau: float
) -> GaussianMixture:
    """Closed-form ``p_E`` distribution for a squeezed or coherent control mode."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    means = spec.phases
    if psi.kind == "coherent":
        means = means + psi.alpha.imag / tau
    s_eff = psi.s0
    sigma = 1.0 / (math.sqrt(2.0) * s_eff * tau)
    return GaussianMixture(means, spec.weights, sigma, s0_effective=s_eff, tau=tau)


def density_at(mix: GaussianMixture, pE):
    """Mixture density at ``pE`` (scalar or array)."""
    p = np.asarray(pE, dtype=float)
    z = (p[..., None] - mix.means) / mix.sigma
    dens = np.exp(-0.5 * z * z) @ mix.weights / (mix.sigma * math.sqrt(2.0 * math.pi))
    return float(dens) if dens.ndim == 0 else dens


def _sample_chunk(mix: GaussianMixture, cum: np.ndarray, seed: int, index: int, size: int):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
    u = rng.random(size)
    comp = np.minimum(np.searchsorted(cum, u, side="right"), cum.size - 1)
    return mix.means[comp] + mix.sigma * rng.standard_normal(size)


def sample_momentum(
    mix: GaussianMixture,
    count: int,
    seed: int,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> np.ndarray:
    """Draw ``count`` i.i.d. ``p_E`` values.

    The request is cut into fixed-size chunks; chunk ``k`` uses its own PCG64
    stream seeded from ``SeedSequence(seed, spawn_key=(k,))``.  The output
    therefore depends on ``seed`` and ``chunk_size`` only, never on
    ``workers``.
    """
    count = int(count)
    if count < 1:
        raise ValueError("count must be at least 1")
    cum = np.cumsum(mix.weights)
    sizes = [min(chunk_size, count - start) for start in range(0, count, chunk_size)]
    jobs = [(i, s) for i, s in enumerate(sizes)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_sample_chunk(mix, cum, seed, i, s) for i, s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda j: _sample_chunk(mix, cum, seed, *j), jobs))
    return np.concatenate(parts)


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``p_E`` grid ``lo, lo + h, ..., hi``."""

    lo: float
    hi: float
    points: int = 1 << 16

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("grid needs hi > lo")
        if self.points < 2:
            raise ValueError("grid needs at least two points")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.points - 1)

    def values(self) -> np.ndarray:
        return self.lo + self.step * np.arange(self.points)

    @classmethod
    def covering(cls, mix: GaussianMixture, points: int = 1 << 16, n_sigma: float = 10.0):
        return cls(*mix.span(n_sigma), points)


class GridResolutionError(ValueError):
    pass


@dataclass
class OracleDensity:
    pE: np.ndarray
    density: np.ndarray
    x_range: tuple[float, float] = field(default=(0.0, 0.0))


def fft_oracle_distribution(
    spec: PhaseSpectrum, psi: QumodeWavefunction, tau: float, grid: GridSpec
) -> OracleDensity:
    """Momentum density obtained by Fourier transforming ``G(x)`` numerically.

    For each phase the post-gate amplitude ``G(x) exp(i x phi tau / x0)`` is
    sampled on a uniform position grid and transformed with one FFT whose
    output bins coincide with the requested momentum grid (spacing
    ``dx * dp = 2 pi / M``, zero-padded to ``M >= 4 * points``).  Nothing from
    the closed-form mixture is used.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if len(spec) > 64:
        raise ValueError("oracle is limited to 64 distinct phases")
    sigma = 1.0 / (math.sqrt(2.0) * psi.s0 * tau)
    if grid.points < MIN_GRID_POINTS:
        raise GridResolutionError(f"need at least {MIN_GRID_POINTS} grid points")
    if grid.step > sigma / MIN_POINTS_PER_SIGMA:
        raise GridResolutionError(
            f"grid step {grid.step:.3g} under-resolves sigma {sigma:.3g} "
            f"(need {MIN_POINTS_PER_SIGMA} points per sigma)"
        )

    x0 = psi.x0
    dp = grid.step * tau / x0          # momentum spacing in p units
    p_lo = grid.lo * tau / x0
    M = 1 << max(2, math.ceil(math.log2(4 * grid.points)))
    dx = 2.0 * math.pi / (M * dp)
    xc = psi.center
    x = xc + (np.arange(M) - M // 2) * dx
    span_needed = 10.0 * max(psi.width, x0)
    if M * dx / 2 < span_needed:
        raise GridResolutionError("position window too narrow for the wavefunction")

    G = psi.position_amplitude(x)
    l = np.arange(grid.points)
    out_phase = np.exp(-1j * xc * l * dp) * np.where(l % 2 == 0, 1.0, -1.0)
    pre = np.exp(-1j * x * p_lo)
    prob = np.zeros(grid.points)
    for phi, w in zip(spec.phases, spec.weights):
        f = G * np.exp(1j * x * phi * tau / x0) * pre
        amp = dx / math.sqrt(2.0 * math.pi) * np.fft.fft(f)[: grid.points] * out_phase
        prob += w * np.abs(amp) ** 2
    return OracleDensity(grid.values(), prob * tau / x0, (float(x[0]), float(x[-1])))


def write_density_csv(path, pE: Iterable[float], density: Iterable[float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p_E", "density"])
        for a, b in zip(pE, density):
            writer.writerow([repr(float(a)), repr(float(b))])


def read_density_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_samples(path, samples, fmt: str = "csv") -> None:
    """Write samples as one-per-line CSV or as raw little-endian float64."""
    samples = np.asarray(samples, dtype="<f8")
    if fmt == "csv":
        Path(path).write_text("".join(f"{v!r}\n" for v in samples.tolist()))
    elif fmt == "binary":
        Path(path).write_bytes(samples.tobytes())
    else:
        raise ValueError(f"unknown sample format {fmt!r}")


def read_samples(path, fmt: str = "csv") -> np.ndarray:
    if fmt == "csv":
        return np.loadtxt(path, dtype=float, ndmin=1)
    if fmt == "binary":
        return np.frombuffer(Path(path).read_bytes(), dtype="<f8").copy()
    raise ValueError(f"unknown sample format {fmt!r}")
