"""Eigenphase multisets of target-register Hamiltonians.

A :class:`PhaseSpectrum` is the list of distinct eigenvalues ``phi_m`` of a
Hamiltonian ``H`` acting on ``n`` qubits, each paired with its multiplicity
``c_m``.  Multiplicities always add up to ``2**n``.  Every distribution in
the package is built from one of these.

Spectra of the modular-multiplication unitary ``|l> -> |l q mod N>`` keep
their phases as exact fractions of a full turn so that merging equal phases
never depends on floating-point comparison.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterable

import numpy as np

TWO_PI = 2.0 * math.pi

# Float phases closer than this are merged into a single entry.
MERGE_TOL = 1e-12

MAX_RANDOM_QUBITS = 12


class NonCoprimeError(ValueError):
    """``q`` shares a factor with ``N``, so no multiplicative order exists.

    The shared factor is kept on the exception because the caller can use
    it directly.
    """

    def __init__(self, N: int, q: int):
        self.N = N
        self.q = q
        self.factor = math.gcd(N, q)
        super().__init__(
            f"gcd({q}, {N}) = {self.factor}: q is not a unit mod N "
            f"({self.factor} is already a non-trivial factor)"
        )


@dataclass(frozen=True)
class SpectrumEntry:
    phase: float
    multiplicity: int
    # Phase as a fraction of 2*pi, present for exactly-known spectra.
    turns: Fraction | None = None


@dataclass(frozen=True)
class PhaseSpectrum:
    """Distinct eigenphases with integer multiplicities summing to ``2**n``.

    Build instances with :meth:`from_phases` or :meth:`from_turns`; both merge
    duplicate phases.  The direct constructor only validates.
    """

    entries: tuple[SpectrumEntry, ...]
    n_qubits: int

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be nonnegative")
        total = 0
        for e in self.entries:
            if not math.isfinite(e.phase):
                raise ValueError(f"non-finite phase {e.phase!r}")
            if e.multiplicity < 1:
                raise ValueError("multiplicities must be positive")
            total += e.multiplicity
        if total != 2**self.n_qubits:
            raise ValueError(
                f"multiplicities sum to {total}, expected 2**{self.n_qubits}"
            )

    @classmethod
    def from_phases(
        cls,
        phases: Iterable[float],
        multiplicities: Iterable[int] | None = None,
        n_qubits: int | None = None,
    ) -> "PhaseSpectrum":
        phases = [float(p) for p in phases]
        mults = [1] * len(phases) if multiplicities is None else [int(c) for c in multiplicities]
        if len(mults) != len(phases):
            raise ValueError("phases and multiplicities differ in length")
        if n_qubits is None:
            n_qubits = _exact_log2(sum(mults))
        order = sorted(range(len(phases)), key=lambda i: phases[i])
        merged: list[list] = []
        for i in order:
            if merged and abs(phases[i] - merged[-1][0]) <= MERGE_TOL:
                merged[-1][1] += mults[i]
            else:
                merged.append([phases[i], mults[i]])
        return cls(tuple(SpectrumEntry(p, c) for p, c in merged), n_qubits)

    @classmethod
    def from_turns(
        cls, turns: Iterable[Fraction], multiplicities: Iterable[int], n_qubits: int
    ) -> "PhaseSpectrum":
        """Build a spectrum from exact phases ``2*pi*t`` with ``t`` in [0, 1)."""
        counts: dict[Fraction, int] = {}
        for t, c in zip(turns, multiplicities):
            t = Fraction(t)
            if not 0 <= t < 1:
                raise ValueError(f"turn fraction {t} outside [0, 1)")
            counts[t] = counts.get(t, 0) + int(c)
        entries = tuple(
            SpectrumEntry(TWO_PI * float(t), c, t) for t, c in sorted(counts.items())
        )
        return cls(entries, n_qubits)

    @property
    def dimension(self) -> int:
        return 2**self.n_qubits

    @property
    def phases(self) -> np.ndarray:
        return np.array([e.phase for e in self.entries], dtype=float)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([e.multiplicity for e in self.entries], dtype=np.int64)

    @property
    def weights(self) -> np.ndarray:
        """Multiplicities divided by ``2**n``."""
        return self.multiplicities / float(self.dimension)

    @property
    def is_exact(self) -> bool:
        return all(e.turns is not None for e in self.entries)

    def turns_map(self) -> dict[Fraction, int]:
        if not self.is_exact:
            raise ValueError("spectrum has no exact fractional phases")
        return {e.turns: e.multiplicity for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        rows = []
        for e in self.entries:
            if e.turns is not None:
                rows.append({"num": e.turns.numerator, "den": e.turns.denominator,
                             "mult": e.multiplicity})
            else:
                rows.append({"phase": e.phase, "mult": e.multiplicity})
        return {"n": self.n_qubits, "entries": rows}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseSpectrum":
        n = int(data["n"])
        rows = data["entries"]
        if rows and all("num" in r for r in rows):
            return cls.from_turns(
                (Fraction(int(r["num"]), int(r["den"])) for r in rows),
                (int(r["mult"]) for r in rows),
                n,
            )
        phases, mults = [], []
        for r in rows:
            if "num" in r:
                phases.append(TWO_PI * int(r["num"]) / int(r["den"]))
            else:
                phases.append(float(r["phase"]))
            mults.append(int(r["mult"]))
        return cls.from_phases(phases, mults, n)

    @classmethod
    def from_json(cls, text: str) -> "PhaseSpectrum":
        return cls.from_dict(json.loads(text))


def _exact_log2(total: int) -> int:
    n = total.bit_length() - 1
    if total < 1 or 2**n != total:
        raise ValueError(f"total multiplicity {total} is not a power of two")
    return n


def register_qubits(N: int) -> int:
    """Smallest ``n`` with ``2**n >= N``."""
    if N < 1:
        raise ValueError("N must be positive")
    return (N - 1).bit_length()


def _check_unit(N: int, q: int) -> None:
    if not 1 < q < N:
        raise ValueError(f"need 1 < q < N, got q={q}, N={N}")
    if math.gcd(N, q) != 1:
        raise NonCoprimeError(N, q)


def order(N: int, q: int) -> int:
    """Multiplicative order of ``q`` modulo ``N`` by repeated multiplication."""
    _check_unit(N, q)
    r, x = 1, q % N
    while x != 1:
        x = (x * q) % N
        r += 1
    return r


@dataclass(frozen=True)
class ModularProblem:
    """Order-finding instance: the order of ``q`` modulo ``N``."""

    N: int
    q: int

    def __post_init__(self):
        _check_unit(self.N, self.q)

    @cached_property
    def r(self) -> int:
        return order(self.N, self.q)

    def spectrum(self) -> "PhaseSpectrum":
        return modular_spectrum(self.N, self.q)


def permutation_cycles(N: int, q: int) -> list[list[int]]:
    """Cycles of ``l -> l*q mod N`` on ``{0, ..., N-1}``."""
    _check_unit(N, q)
    seen = bytearray(N)
    cycles = []
    for start in range(N):
        if seen[start]:
            continue
        cycle = []
        l = start
        while not seen[l]:
            seen[l] = 1
            cycle.append(l)
            l = (l * q) % N
        cycles.append(cycle)
    return cycles


def modular_spectrum(N: int, q: int) -> PhaseSpectrum:
    """Eigenphases of the modular-multiplication unitary on ``ceil(log2 N)`` qubits.

    A cycle of length ``L`` contributes the phases ``2*pi*k/L`` for
    ``k = 0..L-1``.  Register states ``l >= N`` are treated as fixed points.
    """
    cycles = permutation_cycles(N, q)
    n = register_qubits(N)
    counts: dict[Fraction, int] = {Fraction(0): 2**n - N} if 2**n > N else {}
    for cycle in cycles:
        L = len(cycle)
        for k in range(L):
            t = Fraction(k, L)
            counts[t] = counts.get(t, 0) + 1
    return PhaseSpectrum.from_turns(counts.keys(), counts.values(), n)


def random_spectrum(n: int, seed: int) -> PhaseSpectrum:
    """``2**n`` phases drawn uniformly from [0, 2*pi)."""
    if not 0 <= n <= MAX_RANDOM_QUBITS:
        raise ValueError(f"n must lie in [0, {MAX_RANDOM_QUBITS}], got {n}")
    rng = np.random.default_rng(seed)
    return PhaseSpectrum.from_phases(rng.uniform(0.0, TWO_PI, size=2**n), n_qubits=n)


def exact_normalized_trace(spec: PhaseSpectrum, t: float = 1.0) -> complex:
    """``Tr(exp(iHt)) / 2**n`` summed directly over the spectrum."""
    return complex(np.sum(spec.weights * np.exp(1j * spec.phases * t)))


def single_phase(phi: float, n_qubits: int = 0) -> PhaseSpectrum:
    return PhaseSpectrum.from_phases([phi], [2**n_qubits], n_qubits)

