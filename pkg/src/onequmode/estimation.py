"""Eigenvalue estimation from momentum samples.

Covers the exact probability of landing within ``delta_E`` of an eigenphase,
the time-energy condition ``T_bound * erf(tau * s0 * delta_E) >= 1``, peak
recovery from a sample histogram, and the eigenspace posterior left in the
register after a momentum outcome.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import erf

from ._util import ceil_count
from .qumode import GaussianMixture, QumodeWavefunction, momentum_distribution
from .spectrum import PhaseSpectrum

DEFAULT_PEAK_THRESHOLD = 0.01
# Neighbourhood half-width of a peak, in units of the component sigma.
NEIGHBOURHOOD_SIGMAS = 3.0


@dataclass(frozen=True)
class ExperimentConfig:
    s0: float = 1.0
    tau: float = 1.0
    x0: float = 1.0
    samples: int = 10_000
    seed: int = 0
    delta_E: float = 0.01
    T_bound: int = 100

    def __post_init__(self):
        if not self.s0 >= 1.0:
            raise ValueError(f"s0 must be >= 1, got {self.s0}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.x0 > 0:
            raise ValueError(f"x0 must be positive, got {self.x0}")
        if int(self.samples) < 1:
            raise ValueError(f"samples must be positive, got {self.samples}")
        if not self.delta_E > 0:
            raise ValueError(f"delta_E must be positive, got {self.delta_E}")
        if int(self.T_bound) < 1:
            raise ValueError(f"T_bound must be positive, got {self.T_bound}")

    @property
    def s0_tau(self) -> float:
        return self.s0 * self.tau

    @property
    def sigma(self) -> float:
        return 1.0 / (math.sqrt(2.0) * self.s0 * self.tau)

    def wavefunction(self) -> QumodeWavefunction:
        return QumodeWavefunction.squeezed(self.s0, self.x0)

    def mixture(self, spec: PhaseSpectrum) -> GaussianMixture:
        return momentum_distribution(spec, self.wavefunction(), self.tau)

    def to_dict(self) -> dict:
        return asdict(self)


def _merged_intervals(centres: np.ndarray, half: float) -> np.ndarray:
    c = np.sort(centres)
    out = [[c[0] - half, c[0] + half]]
    for x in c[1:]:
        if x - half <= out[-1][1]:
            out[-1][1] = x + half
        else:
            out.append([x - half, x + half])
    return np.array(out)


def success_probability(spec: PhaseSpectrum, cfg: ExperimentConfig) -> float:
    """Exact probability that ``p_E`` falls within ``delta_E`` of some eigenphase.

    Overlapping windows are merged first, so no region is counted twice.
    """
    iv = _merged_intervals(spec.phases, cfg.delta_E)
    mass = float(np.sum(cfg.mixture(spec).interval_mass(iv[:, 0], iv[:, 1])))
    return min(mass, 1.0)


def additive_split(spec: PhaseSpectrum, cfg: ExperimentConfig) -> tuple[float, float]:
    """``(P(l=m), P(l!=m))``: own-window mass and cross-window mass.

    The cross term counts every window separately, so the two may add up to
    more than :func:`success_probability` when windows overlap.
    """
    mix = cfg.mixture(spec)
    diag = math.erf(cfg.s0_tau * cfg.delta_E)
    scale = math.sqrt(2.0) * mix.sigma
    lo = (spec.phases - cfg.delta_E)[:, None]
    hi = (spec.phases + cfg.delta_E)[:, None]
    per = 0.5 * (erf((hi - mix.means) / scale) - erf((lo - mix.means) / scale))
    np.fill_diagonal(per, 0.0)
    return diag, float(np.sum(per @ mix.weights))


def measurement_budget(P: float) -> int:
    """Expected number of measurements for one success, ``ceil(1/P)``."""
    if not P > 0:
        raise ValueError("success probability must be positive")
    if P > 1:
        raise ValueError("success probability cannot exceed 1")
    return ceil_count(1.0 / P)


@dataclass(frozen=True)
class TimeEnergyCheck:
    satisfied: bool
    margin: float
    linearized: float


def time_energy_check(cfg: ExperimentConfig) -> TimeEnergyCheck:
    x = cfg.tau * cfg.s0 * cfg.delta_E
    margin = cfg.T_bound * math.erf(x)
    return TimeEnergyCheck(margin >= 1.0, margin, cfg.T_bound * x)


@dataclass
class PhaseEstimateReport:
    peaks: list[tuple[float, float]]
    samples_used: int
    bin_width: float
    histogram: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def to_dict(self, include_histogram: bool = False) -> dict:
        out = {
            "peaks": [{"estimate": e, "mass": m} for e, m in self.peaks],
            "samples_used": self.samples_used,
            "bin_width": self.bin_width,
        }
        if include_histogram:
            out["histogram"] = [{"bin_center": c, "mass": m} for c, m in self.histogram]
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def write_histogram_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_center", "mass"])
            for c, m in self.histogram:
                w.writerow([repr(c), repr(m)])


def estimate_phases(
    samples, cfg: ExperimentConfig, threshold: float = DEFAULT_PEAK_THRESHOLD
) -> PhaseEstimateReport:
    """Locate the peaks of the sampled ``p_E`` distribution.

    Samples are binned with width ``min(delta_E, 1/(2 s0 tau))``.  Every local
    maximum of the bin masses (ties go to the lower bin) is a candidate; its
    neighbourhood is the bins within three component sigmas.  Candidates are
    taken in order of neighbourhood mass, skipping any whose neighbourhood
    would overlap an accepted one, and kept while that mass is at least
    ``threshold``.  The estimate is the mass-weighted mean of the
    neighbourhood bin centres.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    T = x.size
    h = min(cfg.delta_E, 1.0 / (2.0 * cfg.s0_tau))
    lo = float(x.min())
    if lo == float(x.max()):
        return PhaseEstimateReport([(lo, 1.0)], T, h, [(lo, 1.0)])

    idx, counts = np.unique(np.floor((x - lo) / h).astype(np.int64), return_counts=True)
    mass = counts / T
    centres = lo + (idx + 0.5) * h

    pos = np.searchsorted(idx, idx - 1)
    has_left = (pos < idx.size) & (idx[np.minimum(pos, idx.size - 1)] == idx - 1)
    left = np.where(has_left, mass[np.minimum(pos, idx.size - 1)], 0.0)
    pos = np.searchsorted(idx, idx + 1)
    has_right = (pos < idx.size) & (idx[np.minimum(pos, idx.size - 1)] == idx + 1)
    right = np.where(has_right, mass[np.minimum(pos, idx.size - 1)], 0.0)
    is_peak = (mass > left) & (mass >= right)

    R = max(1, math.ceil(NEIGHBOURHOOD_SIGMAS * cfg.sigma / h))
    cmass = np.concatenate([[0.0], np.cumsum(mass)])
    cmom = np.concatenate([[0.0], np.cumsum(mass * centres)])
    cand = np.flatnonzero(is_peak)
    a = np.searchsorted(idx, idx[cand] - R, side="left")
    b = np.searchsorted(idx, idx[cand] + R, side="right")
    nmass = cmass[b] - cmass[a]
    nmom = cmom[b] - cmom[a]

    accepted: list[int] = []
    peaks = []
    for k in sorted(range(cand.size), key=lambda k: (-nmass[k], idx[cand[k]])):
        if nmass[k] < threshold:
            break
        bin_k = idx[cand[k]]
        if any(abs(bin_k - j) <= 2 * R for j in accepted):
            continue
        accepted.append(bin_k)
        peaks.append((float(nmom[k] / nmass[k]), float(nmass[k])))
    hist = list(zip(centres.tolist(), mass.tolist()))
    return PhaseEstimateReport(peaks, T, h, hist)


class PosteriorUnderflowError(ArithmeticError):
    pass


def _log_posterior(spec: PhaseSpectrum, p: float, s0_tau: float) -> np.ndarray:
    return np.log(spec.multiplicities.astype(float)) - (s0_tau * (p - spec.phases)) ** 2


def eigenvector_posterior(spec: PhaseSpectrum, p_measured: float, cfg: ExperimentConfig) -> np.ndarray:
    """Weights over ``spec.entries`` of the register state left by outcome ``p_measured``.

    ``w_m`` is proportional to ``c_m exp(-(s0 tau)^2 (p - phi_m)^2)``.
    """
    raw = spec.multiplicities * np.exp(-(cfg.s0_tau * (p_measured - spec.phases)) ** 2)
    total = raw.sum()
    if total == 0.0:
        raise PosteriorUnderflowError(
            f"p = {p_measured} is too far from every eigenphase; all weights underflow"
        )
    return raw / total


def posterior_concentration(spec: PhaseSpectrum, index: int, s0: float, tau: float = 1.0) -> float:
    """Mean posterior weight on entry ``index`` when ``p`` is drawn from that entry's peak."""
    s0_tau = s0 * tau
    sigma = 1.0 / (math.sqrt(2.0) * s0_tau)
    mu = spec.phases[index]

    def integrand(z):
        lp = _log_posterior(spec, mu + sigma * z, s0_tau)
        lp -= lp.max()
        w = np.exp(lp)
        return w[index] / w.sum() * math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    val, _ = integrate.quad(integrand, -12.0, 12.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val
