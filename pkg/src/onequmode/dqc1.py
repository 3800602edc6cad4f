"""Normalised-trace estimation from momentum samples.

At ``tau = 1`` the mean of ``exp(i p_E)`` equals
``exp(-1/(4 s0^2)) * Tr(U)/2**n``; dividing out the damping factor gives an
unbiased estimate of the normalised trace.  ``F(s0)`` is the sample-count
overhead relative to an ideal pure control qubit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._util import ceil_count
from .qumode import QumodeWavefunction, momentum_distribution
from .spectrum import PhaseSpectrum


def F_overhead(s0: float) -> float:
    """``sinh(1/(2 s0^2)) + exp(-1/(2 s0^2))``; decreases from 1.1276 at s0=1 towards 1."""
    if not s0 >= 1:
        raise ValueError(f"s0 must be >= 1, got {s0}")
    a = 1.0 / (2.0 * s0 * s0)
    return math.sinh(a) + math.exp(-a)


def _check_delta(delta: complex) -> float:
    delta = complex(delta)
    if not (delta.real > 0 and delta.imag > 0):
        raise ValueError(f"both components of delta must be positive, got {delta}")
    return min(delta.real, delta.imag)


def required_samples(delta: complex, s0: float) -> int:
    """``ceil(F(s0) / min(Re delta, Im delta)^2)``."""
    d = _check_delta(delta)
    return ceil_count(F_overhead(s0) / (d * d))


@dataclass(frozen=True)
class TraceEstimate:
    value: complex
    raw_mean: complex
    samples_used: int
    correction: float
    target_delta: complex | None = None
    corrected: bool = True

    def to_dict(self) -> dict:
        out = {
            "value": [self.value.real, self.value.imag],
            "raw_mean": [self.raw_mean.real, self.raw_mean.imag],
            "samples_used": self.samples_used,
            "correction": self.correction,
            "corrected": self.corrected,
        }
        if self.target_delta is not None:
            out["target_delta"] = [self.target_delta.real, self.target_delta.imag]
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def estimate_trace(samples, s0: float, delta: complex | None = None, correct: bool = True) -> TraceEstimate:
    """Normalised trace of ``U = exp(iH)`` from ``p_E`` samples taken at ``tau = 1``.

    With ``correct=False`` the reported value is the raw sample mean.
    """
    return estimate_trace_at(samples, s0, tau=1.0, t=1.0, delta=delta, correct=correct)


def estimate_trace_at(
    samples,
    s0: float,
    tau: float,
    t: float = 1.0,
    delta: complex | None = None,
    correct: bool = True,
) -> TraceEstimate:
    """Estimate ``Tr(exp(iHt))/2**n`` from samples taken at gate time ``tau``.

    Uses ``E[exp(i t p_E)] = exp(-t^2 / (4 (s0 tau)^2)) Tr(exp(iHt))/2**n``.
    ``t = tau`` recovers the trace of ``U_tau`` with damping
    ``exp(-1/(4 s0^2))``.
    """
    if not s0 >= 1:
        raise ValueError(f"s0 must be >= 1, got {s0}")
    if not tau > 0:
        raise ValueError("tau must be positive")
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    if delta is not None:
        _check_delta(delta)
        delta = complex(delta)
    raw = complex(np.mean(np.exp(1j * t * x)))
    corr = math.exp(-t * t / (4.0 * (s0 * tau) ** 2))
    value = raw / corr if correct else raw
    return TraceEstimate(value, raw, int(x.size), corr, delta, correct)


def analytic_raw_mean(spec: PhaseSpectrum, s0: float, tau: float = 1.0, t: float = 1.0) -> complex:
    """Closed-form ``E[exp(i t p_E)]`` of the squeezed-input mixture."""
    mix = momentum_distribution(spec, QumodeWavefunction.squeezed(s0), tau)
    return mix.characteristic(t)


@dataclass(frozen=True)
class VarianceBounds:
    sigmaR2: float
    sigmaI2: float
    bound: float

    @property
    def holds(self) -> bool:
        # Equality is attained for some spectra; allow rounding.
        slack = 1e-12
        return self.sigmaR2 <= self.bound + slack and self.sigmaI2 <= self.bound + slack


def variance_bounds(spec: PhaseSpectrum, s0: float) -> VarianceBounds:
    """Exact variances of ``cos p_E`` and ``sin p_E`` at ``tau = 1``, and their bound.

    The second moments come from the characteristic function at frequency 2:
    ``cos^2 = (1 + cos 2p)/2`` and ``sin^2 = (1 - cos 2p)/2``.
    """
    mix = momentum_distribution(spec, QumodeWavefunction.squeezed(s0), 1.0)
    m1 = mix.characteristic(1.0)
    m2 = mix.characteristic(2.0)
    sr = 0.5 * (1.0 + m2.real) - m1.real**2
    si = 0.5 * (1.0 - m2.real) - m1.imag**2
    bound = math.exp(-1.0 / (2.0 * s0 * s0)) * F_overhead(s0)
    out = VarianceBounds(sr, si, bound)
    if not out.holds:
        raise AssertionError(f"variance bound violated: {out}")
    return out
