"""Converting squeezing into energy, qudit dimension and qubit count."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from .factoring import classical_check
from .spectrum import register_qubits

# Proportionality constant in D ~ s0 * delta_phi; a labelled convention.
DIMENSION_CONSTANT = 1.0


def mean_photon_number(s0: float) -> float:
    """``sinh(ln s0)^2``, equal to ``((s0 - 1/s0) / 2)^2``."""
    if not s0 >= 1:
        raise ValueError(f"s0 must be >= 1, got {s0}")
    return math.sinh(math.log(s0)) ** 2


class QuditDimension(NamedTuple):
    dim: float
    peak_width: float


def qudit_dimension(s0: float, delta_phi: float) -> QuditDimension:
    """``D = s0 * delta_phi`` (at least 1) and the peak width ``w = 1/s0``."""
    if not s0 >= 1:
        raise ValueError(f"s0 must be >= 1, got {s0}")
    if not delta_phi > 0:
        raise ValueError(f"delta_phi must be positive, got {delta_phi}")
    return QuditDimension(max(1.0, DIMENSION_CONSTANT * s0 * delta_phi), 1.0 / s0)


def equivalent_qubits(dim: float) -> float:
    return math.log2(dim)


@dataclass
class ResourceReport:
    context: str
    s0: float
    mean_photons: float
    qudit_dim: float
    equivalent_qubits: float
    delta_phi: float | None
    peak_width: float
    params: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def table(self) -> str:
        rows = [
            ("context", self.context),
            ("s0", f"{self.s0:.6g}"),
            ("mean photons <n_p>", f"{self.mean_photons:.6g}"),
            ("qudit dimension D", f"{self.qudit_dim:.6g}"),
            ("equivalent qubits m", f"{self.equivalent_qubits:.6g}"),
            ("peak spacing", "-" if self.delta_phi is None else f"{self.delta_phi:.6g}"),
            ("peak width w", f"{self.peak_width:.6g}"),
        ]
        rows += [(k, f"{v:.6g}" if isinstance(v, float) else str(v)) for k, v in self.extra.items()]
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v}" for k, v in rows]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


def resource_report(context: str, **params) -> ResourceReport:
    """Resource summary for ``"dqc1"``, ``"factoring"`` or ``"phase_estimation"``.

    factoring takes ``N`` and optionally ``tau`` (default 1); phase_estimation
    takes ``delta_E``, ``T_bound`` and ``tau`` and uses the smallest ``s0``
    meeting ``T_bound * tau * s0 * delta_E >= 1``.
    """
    note = f"D uses D = s0 * delta_phi with proportionality constant {DIMENSION_CONSTANT:g} (convention)"
    if context == "dqc1":
        s0 = 1.0
        return ResourceReport("dqc1", s0, mean_photon_number(s0), 2.0, 1.0, None, 1.0,
                              params, ["D = 2 for DQC1 (a single control qubit)"])
    if context == "factoring":
        N = int(params["N"])
        tau = float(params.get("tau", 1.0))
        classical_check(N)
        n = register_qubits(N)
        s0 = float(2 ** (2 * n))
        dphi = 1.0 / N
        qd = qudit_dimension(s0, dphi)
        extra = {
            "n_qubits": n,
            "idealised_D": N,
            "idealised_s0": N * N,
            "s0_tau": s0 * tau,
            "sufficiency_ok": s0 * tau >= 2 ** (2 * n),
        }
        notes = [note]
        if 2**n != N:
            notes.append(
                f"n = ceil(log2 {N}) = {n} gives s0 = 2^(2n) = {s0:g} != N^2 = {N * N}, "
                f"so D = {qd.dim:.6g} differs from the idealised D = N = {N}"
            )
        return ResourceReport("factoring", s0, mean_photon_number(s0), qd.dim,
                              equivalent_qubits(qd.dim), dphi, qd.peak_width,
                              {"N": N, "tau": tau}, notes, extra)
    if context == "phase_estimation":
        delta_E = float(params["delta_E"])
        T_bound = int(params.get("T_bound", 1))
        tau = float(params.get("tau", 1.0))
        if not (delta_E > 0 and T_bound >= 1 and tau > 0):
            raise ValueError("phase estimation needs delta_E > 0, T_bound >= 1, tau > 0")
        s0 = max(1.0, 1.0 / (T_bound * tau * delta_E))
        qd = qudit_dimension(s0, delta_E)
        return ResourceReport("phase_estimation", s0, mean_photon_number(s0), qd.dim,
                              equivalent_qubits(qd.dim), delta_E, qd.peak_width,
                              {"delta_E": delta_E, "T_bound": T_bound, "tau": tau},
                              [note, "peak spacing taken as delta_E"])
    raise ValueError(f"unknown context {context!r}")
