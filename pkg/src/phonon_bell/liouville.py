"""Time-dependent Lindblad generator in the cavity rotating frame.

Internal units: angular frequencies in rad/ns, time in ns. The optical
carrier is removed by working in the frame rotating at the cavity
frequency; the detector is resonant with the cavity, so its free
Hamiltonian vanishes and pulse carriers enter only as detunings.

Sign conventions fixed here (and verified by the Ehrenfest tests):

* thermal dissipators pair ``(n_th + 1)`` with ``D[b_j]`` (decay) and
  ``n_th`` with ``D[b_j^dag]`` (excitation), so the mechanics relax to the
  thermal distribution;
* the cascaded cavity-to-detector term is the hermiticity-preserving
  ``(zeta/2) ([a rho, d^dag] + [d, rho a^dag])``, which feeds the detector
  mean field as ``d<d>/dt = -(zeta/2) <a> - (kappa_d/2) <d>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import IntegrityError, ParameterError, StiffnessError
from .modespace import (
    MODE_CAVITY,
    MODE_DETECTOR,
    MODE_MECH1,
    MODE_MECH2,
    ModeSpace,
    OperatorMatrix,
)

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class SystemParams:
    """All physical rates of the model, in rad/ns.

    ``zeta`` is the dissipative cavity-to-detector cascade rate; complete
    positivity requires ``zeta**2 <= kappa * kappa_d``.
    """

    Omega1: float
    Omega2: float
    g1: float
    g2: float
    kappa: float
    kappa_d: float
    zeta: float
    gamma1: float
    gamma2: float
    n_th: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if not (self.Omega2 > self.Omega1 > 0):
            raise ParameterError("need Omega2 > Omega1 > 0")
        for name in ("kappa", "kappa_d", "zeta", "gamma1", "gamma2", "n_th", "eta"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.zeta**2 > self.kappa * self.kappa_d * (1 + 1e-12):
            raise ParameterError(
                "complete positivity requires zeta^2 <= kappa * kappa_d"
            )

    @property
    def mech(self):
        return ((self.Omega1, self.g1, self.gamma1), (self.Omega2, self.g2, self.gamma2))


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse: amplitude (rad/ns), center/width (ns), detuning
    from the cavity resonance (rad/ns)."""

    amplitude: float
    t0: float
    sigma: float
    detuning: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ParameterError("pulse width sigma must be > 0")


@dataclass
class QuantumState:
    """Density matrix over a ModeSpace, tagged with a time stamp (ns)."""

    rho: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)

    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(op @ self.rho))

    def occupation(self, space: ModeSpace, mode: int) -> float:
        return float(np.real(self.expect(space.number(mode))))

    def validate(self, trace_tol=1e-8, herm_tol=1e-10, pos_tol=1e-8) -> None:
        if abs(self.trace() - 1.0) > trace_tol:
            raise IntegrityError(f"trace drift {self.trace() - 1.0:.3e} at t={self.time}")
        herm = np.max(np.abs(self.rho - self.rho.conj().T))
        if herm > herm_tol:
            raise IntegrityError(f"hermiticity violation {herm:.3e} at t={self.time}")
        lam_min = float(np.min(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))))
        if lam_min < -pos_tol:
            raise IntegrityError(f"negative eigenvalue {lam_min:.3e} at t={self.time}")


def drive_envelope(pulse: PulseSpec, t: float):
    """Rotating-frame drive amplitude A exp(-((t-t0)/sigma)^2) exp(-i Delta t)."""
    arg = (t - pulse.t0) / pulse.sigma
    return pulse.amplitude * np.exp(-arg * arg) * np.exp(-1j * pulse.detuning * t)


def _total_drive(pulses: Sequence[PulseSpec], t: float) -> complex:
    return sum((drive_envelope(p, t) for p in pulses), 0j)


def _static_hamiltonian(space: ModeSpace, params: SystemParams) -> np.ndarray:
    """Undriven rotating-frame Hamiltonian: mechanics + optomechanical coupling."""
    n_a = space.number(MODE_CAVITY)
    H = np.zeros((space.total_dim,) * 2, dtype=complex)
    for mode, (Omega, g, _gamma) in zip((MODE_MECH1, MODE_MECH2), params.mech):
        b = space.annihilation(mode)
        x = b + b.conj().T
        H += Omega * space.number(mode) - g * (n_a @ x)
    return H


def assemble_hamiltonian(
    space: ModeSpace,
    params: SystemParams,
    pulses: Sequence[PulseSpec],
    t: float,
    classical=None,
) -> OperatorMatrix:
    """Hamiltonian at time t.

    Without ``classical``: rotating-frame form with the pulsed drive on the
    cavity. With classical amplitudes (readout phase): the displaced-frame
    Hamiltonian acting on the fluctuations, drive removed.
    """
    a = space.annihilation(MODE_CAVITY)
    n_a = space.number(MODE_CAVITY)
    if classical is None:
        H = _static_hamiltonian(space, params)
        F = _total_drive(pulses, t)
        H += F * a.conj().T + np.conj(F) * a
    else:
        alpha = classical.alpha
        betas = (classical.beta1, classical.beta2)
        H = np.zeros((space.total_dim,) * 2, dtype=complex)
        for mode, (Omega, g, _gamma), beta in zip(
            (MODE_MECH1, MODE_MECH2), params.mech, betas
        ):
            b = space.annihilation(mode)
            x = b + b.conj().T
            H += Omega * space.number(mode)
            H -= 2.0 * g * np.real(beta) * n_a
            H -= g * ((np.conj(alpha) * a + alpha * a.conj().T) @ x)
            H -= g * (n_a @ x)
    return OperatorMatrix(H, hermitian=True)


def _dissipator(o: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """D[o] rho = o^dag o rho + rho o^dag o - 2 o rho o^dag."""
    od = o.conj().T
    odo = od @ o
    return odo @ rho + rho @ odo - 2.0 * (o @ rho @ od)


def lindblad_rhs(
    space: ModeSpace, params: SystemParams, rho: np.ndarray, H: np.ndarray
) -> np.ndarray:
    """Right-hand side of the master equation for the given Hamiltonian."""
    a = space.annihilation(MODE_CAVITY)
    d = space.annihilation(MODE_DETECTOR)
    n_a = space.number(MODE_CAVITY)
    out = -1j * (H @ rho - rho @ H)
    out -= 0.5 * params.kappa * _dissipator(a, rho)
    out -= 0.5 * params.kappa_d * _dissipator(d, rho)
    # cascaded cavity -> detector feeding, hermiticity-preserving form
    ad, dd = a.conj().T, d.conj().T
    out += 0.5 * params.zeta * (
        a @ rho @ dd - dd @ (a @ rho) + d @ (rho @ ad) - (rho @ ad) @ d
    )
    for mode, (_Omega, _g, gamma) in zip((MODE_MECH1, MODE_MECH2), params.mech):
        b = space.annihilation(mode)
        out -= 0.5 * gamma * (params.n_th + 1.0) * _dissipator(b, rho)
        out -= 0.5 * gamma * params.n_th * _dissipator(b.conj().T, rho)
    if params.eta:
        out -= 0.5 * params.eta * _dissipator(n_a, rho)
    return out


# ---------------------------------------------------------------------------
# sparse superoperator machinery (vectorized rho, row-major)


def spre(op) -> sp.csr_matrix:
    op = sp.csr_matrix(op)
    return sp.kron(op, sp.identity(op.shape[0], format="csr"), format="csr")


def spost(op) -> sp.csr_matrix:
    op = sp.csr_matrix(op)
    return sp.kron(sp.identity(op.shape[0], format="csr"), op.T, format="csr")


def commutator_superop(op) -> sp.csr_matrix:
    """Superoperator for rho -> -i [op, rho]."""
    return (-1j) * (spre(op) - spost(op))


def _dissipator_superop(o) -> sp.csr_matrix:
    o = sp.csr_matrix(o)
    odo = (o.conj().T @ o).tocsr()
    return spre(odo) + spost(odo) - 2.0 * sp.kron(o, o.conj(), format="csr")


def static_liouvillian(
    space: ModeSpace,
    params: SystemParams,
    include_coupling=True,
    include_mech_freq=True,
):
    """Time-independent part of the generator as a sparse superoperator.

    ``include_coupling`` selects whether the static Hamiltonian carries the
    optomechanical coupling (full rotating-frame model) or not. With
    ``include_mech_freq=False`` the mechanical free Hamiltonian is dropped
    as well (mechanical interaction picture; the dissipators are invariant
    under it), leaving a purely dissipative generator when both are off.
    """
    a = sp.csr_matrix(space.annihilation(MODE_CAVITY))
    d = sp.csr_matrix(space.annihilation(MODE_DETECTOR))
    n_a = sp.csr_matrix(space.number(MODE_CAVITY))

    if include_coupling:
        H0 = sp.csr_matrix(_static_hamiltonian(space, params))
    else:
        H0 = sp.csr_matrix((space.total_dim,) * 2, dtype=complex)
        if include_mech_freq:
            for mode, (Omega, _g, _gamma) in zip((MODE_MECH1, MODE_MECH2), params.mech):
                H0 = H0 + Omega * sp.csr_matrix(space.number(mode))

    L = commutator_superop(H0)
    L = L - 0.5 * params.kappa * _dissipator_superop(a)
    L = L - 0.5 * params.kappa_d * _dissipator_superop(d)
    # (zeta/2) ([a rho, d^dag] + [d, rho a^dag])
    ad, dd = a.conj().T.tocsr(), d.conj().T.tocsr()
    cross = (
        sp.kron(a, d.conj(), format="csr")
        - spre((dd @ a).tocsr())
        + sp.kron(d, a.conj(), format="csr")
        - spost((ad @ d).tocsr())
    )
    L = L + 0.5 * params.zeta * cross
    for mode, (_Omega, _g, gamma) in zip((MODE_MECH1, MODE_MECH2), params.mech):
        b = sp.csr_matrix(space.annihilation(mode))
        L = L - 0.5 * gamma * (params.n_th + 1.0) * _dissipator_superop(b)
        L = L - 0.5 * gamma * params.n_th * _dissipator_superop(b.conj().T.tocsr())
    if params.eta:
        L = L - 0.5 * params.eta * _dissipator_superop(n_a)
    return L.tocsr()


@dataclass
class _WriteGenerator:
    """L(t) v = L0 v + F(t) K[a^dag] v + F*(t) K[a] v."""

    L0: sp.csr_matrix
    K_adag: sp.csr_matrix
    K_a: sp.csr_matrix
    pulses: tuple

    @classmethod
    def build(cls, space, params, pulses):
        a = space.annihilation(MODE_CAVITY)
        return cls(
            L0=static_liouvillian(space, params, include_coupling=True),
            K_adag=commutator_superop(a.conj().T),
            K_a=commutator_superop(a),
            pulses=tuple(pulses),
        )

    def __call__(self, t, v):
        out = self.L0 @ v
        F = _total_drive(self.pulses, t)
        if F != 0:
            out += F * (self.K_adag @ v) + np.conj(F) * (self.K_a @ v)
        return out


def thermal_state(space: ModeSpace, occupations) -> QuantumState:
    """Cavity/detector vacuum, mechanics thermal with the given mean
    occupations (renormalized over the truncated levels)."""
    occupations = tuple(float(n) for n in occupations)
    if len(occupations) != 2:
        raise ParameterError("expected one occupation per mechanical mode")
    if any(n < 0 for n in occupations):
        raise ParameterError("thermal occupation must be >= 0")
    factors = []
    for mode in range(space.n_modes):
        dim = space.dims[mode]
        p = np.zeros(dim)
        if mode in (MODE_MECH1, MODE_MECH2):
            nbar = occupations[mode - MODE_MECH1]
            n = np.arange(dim, dtype=float)
            p = nbar**n / (1.0 + nbar) ** (n + 1)
            p /= p.sum()
        else:
            p[0] = 1.0
        factors.append(np.diag(p).astype(complex))
    rho = factors[0]
    for f in factors[1:]:
        rho = np.kron(rho, f)
    return QuantumState(rho, time=0.0)


def _validate_samples(states, tol):
    trace_tol = max(1e-8, 50.0 * tol)
    herm_tol = max(1e-10, 10.0 * tol)
    for st in states:
        st.validate(trace_tol=trace_tol, herm_tol=herm_tol, pos_tol=1e-8)


def propagate(
    state: QuantumState,
    space: ModeSpace,
    params: SystemParams,
    pulses: Sequence[PulseSpec],
    t_end: float,
    sample_times: Optional[Sequence[float]] = None,
    tol: float = DEFAULT_TOL,
    method: str = "RK45",
    rk4_dt: float = 1e-3,
    validate: bool = True,
):
    """Propagate the master equation, returning states at the sample times.

    ``method`` is the adaptive embedded pair ("RK45", default) or "rk4"
    for the fixed-step cross-check (step ``rk4_dt``).
    """
    t0 = state.time
    if sample_times is None:
        sample_times = [t_end]
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.size and (sample_times[0] < t0 - 1e-12 or sample_times[-1] > t_end + 1e-12):
        raise ParameterError("sample times must lie within [state.time, t_end]")

    gen = _WriteGenerator.build(space, params, pulses)
    v0 = state.rho.ravel()

    if method == "rk4":
        rhos = _fixed_rk4(gen, v0, t0, sample_times, rk4_dt)
    else:
        sol = solve_ivp(
            gen,
            (t0, t_end),
            v0,
            method=method,
            t_eval=sample_times,
            rtol=tol,
            atol=tol * 1e-4,
            dense_output=False,
        )
        if not sol.success:
            raise StiffnessError(f"integrator failed: {sol.message}")
        rhos = sol.y.T

    n = space.total_dim
    states = [
        QuantumState(rhos[i].reshape(n, n), time=float(sample_times[i]))
        for i in range(len(sample_times))
    ]
    if validate:
        _validate_samples(states, tol)
    return states


def _fixed_rk4(rhs, v0, t0, sample_times, dt):
    """Fixed-step RK4 with step splitting so the sample times hit exactly."""
    out = np.empty((len(sample_times), v0.size), dtype=complex)
    v, t = v0.copy(), t0
    for i, ts in enumerate(sample_times):
        while t < ts - 1e-14:
            h = min(dt, ts - t)
            k1 = rhs(t, v)
            k2 = rhs(t + 0.5 * h, v + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, v + 0.5 * h * k2)
            k4 = rhs(t + h, v + h * k3)
            v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        out[i] = v
    return out
