"""Closed-form results for pure heralded states, plus the cavity pure
dephasing estimate from spectator mechanical modes. Used as fast oracles
for the full numerics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError

_NORM_ATOL = 1e-12


@dataclass(frozen=True)
class PureWriteState:
    """Heralded mechanical state c00|00> + c01|01> + c10|10> + c11|11>."""

    c00: complex
    c01: complex
    c10: complex
    c11: complex

    def __post_init__(self):
        norm = (
            abs(self.c00) ** 2
            + abs(self.c01) ** 2
            + abs(self.c10) ** 2
            + abs(self.c11) ** 2
        )
        if abs(norm - 1.0) > 1e-8:
            raise ParameterError(f"state not normalized: |c|^2 = {norm}")

    def amplitudes(self) -> np.ndarray:
        return np.array([self.c00, self.c01, self.c10, self.c11], dtype=complex)

    def density_matrix(self) -> np.ndarray:
        c = self.amplitudes()
        return np.outer(c, c.conj())


def bell_state(phi: float = 0.0) -> PureWriteState:
    """(|10> + e^{i phi}|01>)/sqrt(2)."""
    return PureWriteState(0, np.exp(1j * phi) / np.sqrt(2), 1 / np.sqrt(2), 0)


def separable_state(phi1: float = 0.0, phi2: float = 0.0) -> PureWriteState:
    """(|0> + e^{i phi1}|1>)(|0> + e^{i phi2}|1>)/2."""
    return PureWriteState(
        0.5,
        0.5 * np.exp(1j * phi2),
        0.5 * np.exp(1j * phi1),
        0.5 * np.exp(1j * (phi1 + phi2)),
    )


def analytic_intensity(state: PureWriteState) -> float:
    """Cavity intensity after an ideal anti-Stokes readout:
    |c10 + c01|^2 + 2 |c11|^2."""
    return float(abs(state.c10 + state.c01) ** 2 + 2.0 * abs(state.c11) ** 2)


def analytic_concurrence(state: PureWriteState) -> float:
    """C = 2 |c10 c01 - c00 c11|, clipped to [0, 1]."""
    val = 2.0 * abs(state.c10 * state.c01 - state.c00 * state.c11)
    return float(np.clip(val, 0.0, 1.0))


def analytic_visibility(state: PureWriteState) -> float:
    """V = |c10|^2 / (|c10|^2 + |c11|^2), valid for |c01| = |c10|.

    For c00 = 0 this reduces to V = C / (2 - C).
    """
    if abs(abs(state.c01) - abs(state.c10)) > 1e-9:
        raise ParameterError("analytic visibility requires |c01| = |c10|")
    denom = abs(state.c10) ** 2 + abs(state.c11) ** 2
    if denom == 0:
        return 0.0
    return float(abs(state.c10) ** 2 / denom)


def visibility_from_concurrence(C: float) -> float:
    """V = C / (2 - C) for heralded states with no |00> or |11> weight."""
    return float(C / (2.0 - C))


@dataclass(frozen=True)
class ExtraMode:
    """A spectator mechanical mode contributing cavity pure dephasing."""

    Omega: float
    gamma: float
    g: float
    n_th: float = 0.0

    def __post_init__(self):
        if self.Omega <= 0 or self.gamma <= 0:
            raise ParameterError("Omega and gamma must be positive")
        if self.g < 0 or self.n_th < 0:
            raise ParameterError("g and n_th must be >= 0")


def dephasing_rate_estimate(modes: Sequence[ExtraMode]) -> float:
    """eta = sum_j (n_th_j + 1) gamma_j g_j^2 / Omega_j^2 over the extra
    mechanical modes."""
    return float(sum((m.n_th + 1.0) * m.gamma * (m.g / m.Omega) ** 2 for m in modes))


def dephasing_rate_single_mode(Omega: float, gamma: float, g: float, n_th: float) -> float:
    """Single-mode order-of-magnitude variant (g/Omega)^2 (2 n_th + 1) gamma."""
    return float((g / Omega) ** 2 * (2.0 * n_th + 1.0) * gamma)
