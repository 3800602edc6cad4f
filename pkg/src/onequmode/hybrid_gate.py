"""Checks on the hybrid control gate and its elementary-gate decomposition.

The elementary terms ``h_k`` of a commuting decomposition are kept in a
shared eigenbasis, so each term is just a vector of eigenphases and the
product of ``exp(i x h_k)`` reduces to adding phases.

For modular multiplication the elementary gates are additions
``l -> l + 2**k b_k (mod N)`` built from the binary digits of ``q - 1``;
their product sends ``|1>`` to ``|q>``.
"""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectrum import register_qubits


def hybrid_phase(x: float, phi: float, tau: float, x0: float = 1.0) -> complex:
    """Phase ``exp(i phi x tau / x0)`` imprinted on ``|x> (x) |u_j>``."""
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    return cmath.exp(1j * phi * x * tau / x0)


@dataclass(frozen=True)
class DiagonalTerm:
    phases: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.phases, dtype=float)
        if p.ndim != 1 or not np.all(np.isfinite(p)):
            raise ValueError("phases must be a finite vector")
        object.__setattr__(self, "phases", p)

    def to_list(self) -> list[float]:
        return self.phases.tolist()


def verify_commuting_product(
    terms: Sequence[DiagonalTerm], x_samples: Sequence[float]
) -> tuple[bool, float]:
    """Compare ``prod_k exp(i x h_k)`` with ``exp(i x sum_k h_k)`` entrywise.

    Returns ``(ok, max_deviation)`` with ``ok`` meaning deviation < 1e-12.
    """
    if not terms:
        raise ValueError("need at least one term")
    size = terms[0].phases.size
    if any(t.phases.size != size for t in terms):
        raise ValueError("all terms must have the same length")
    stack = np.stack([t.phases for t in terms])
    total = stack.sum(axis=0)
    worst = 0.0
    for x in x_samples:
        prod = np.ones(size, dtype=complex)
        for row in stack:
            prod *= np.exp(1j * x * row)
        worst = max(worst, float(np.max(np.abs(prod - np.exp(1j * x * total)))))
    return worst < 1e-12, worst


@dataclass(frozen=True)
class AdditionGate:
    shift: int
    modulus: int

    def __post_init__(self):
        if not 0 <= self.shift < self.modulus:
            raise ValueError("shift must lie in [0, modulus)")

    def permutation(self, size: int | None = None) -> np.ndarray:
        """Permutation of ``Z_{2**n}``; states ``>= modulus`` are fixed."""
        N = self.modulus
        size = 2 ** register_qubits(N) if size is None else size
        perm = np.arange(size)
        perm[:N] = (np.arange(N) + self.shift) % N
        return perm


def addition_gates(N: int, q: int) -> list[AdditionGate]:
    """One gate per set bit of ``q - 1``."""
    if not 1 < q < N:
        raise ValueError(f"need 1 < q < N, got q={q}, N={N}")
    d = q - 1
    return [AdditionGate(1 << k, N) for k in range(d.bit_length()) if d >> k & 1]


def decomposition_report(N: int, q: int) -> dict:
    gates = addition_gates(N, q)
    perms = [g.permutation() for g in gates]
    k = len(perms)
    commute = [[bool(np.array_equal(perms[i][perms[j]], perms[j][perms[i]]))
                for j in range(k)] for i in range(k)]
    state = 1
    for p in perms:
        state = int(p[state])
    return {
        "N": N,
        "q": q,
        "gates": [{"shift": g.shift, "modulus": g.modulus} for g in gates],
        "commutation": commute,
        "image_of_one": state,
        "target": q % N,
        "product_ok": state == q % N,
        "all_commute": all(all(row) for row in commute),
    }


def verify_addition_decomposition(N: int, q: int) -> bool:
    rep = decomposition_report(N, q)
    return rep["all_commute"] and rep["product_ok"]


def decomposition_json(N: int, q: int) -> str:
    return json.dumps(decomposition_report(N, q), sort_keys=True)
