"""Measured quantities: reduced states, concurrence, displaced moments,
zero-delay g2 and fringe visibility extraction."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateStateError, FitError, ParameterError
from .modespace import ModeSpace

G2_INTENSITY_FLOOR = 1e-14

_SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
_SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y)


def partial_trace(rho: np.ndarray, space: ModeSpace, keep) -> np.ndarray:
    """Reduce rho to the modes in ``keep`` (indices, order preserved)."""
    keep = tuple(keep)
    if not keep:
        raise ParameterError("keep must name at least one mode")
    dims = space.dims
    n = len(dims)
    tensor = rho.reshape(dims + dims)
    traced = [m for m in range(n) if m not in keep]
    # trace out highest axes first so earlier indices stay valid
    for m in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=m, axis2=m + n)
        n -= 1
    d_keep = int(np.prod([dims[m] for m in keep]))
    return tensor.reshape(d_keep, d_keep)


@dataclass
class TwoQubitState:
    """Mechanical state restricted to occupations {0,1} of each mode.

    ``retained_probability`` is the weight of the restricted block before
    renormalization, kept so the approximation stays auditable.
    """

    rho: np.ndarray
    retained_probability: float

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.shape != (4, 4):
            raise ParameterError("two-qubit state must be 4x4")


def two_qubit_restrict(rho_m: np.ndarray, mech_dims=None, floor=1e-12) -> TwoQubitState:
    """Restrict a two-mode mechanical density matrix to the
    {|00>,|01>,|10>,|11>} block and renormalize."""
    rho_m = np.asarray(rho_m, dtype=complex)
    d_tot = rho_m.shape[0]
    if mech_dims is None:
        d = int(round(np.sqrt(d_tot)))
        if d * d != d_tot:
            raise ParameterError("cannot infer mechanical dims; pass mech_dims")
        mech_dims = (d, d)
    d1, d2 = mech_dims
    idx = [n1 * d2 + n2 for n1 in (0, 1) for n2 in (0, 1)]
    block = rho_m[np.ix_(idx, idx)]
    p = float(np.real(np.trace(block)))
    if p < floor:
        raise DegenerateStateError(f"retained probability {p:.3e} below floor")
    return TwoQubitState(block / p, retained_probability=p)


def concurrence(q: TwoQubitState) -> float:
    """Wootters concurrence of the restricted two-qubit state.

    Uses the symmetric-tau form: with rho = X X^dag, the Wootters lambdas
    are the singular values of X^T S X (S the spin flip).  Equivalent to
    sqrt-eigenvalues of rho rho~ but without the sqrt blow-up of rounding
    noise near zero eigenvalues."""
    p, U = np.linalg.eigh(q.rho)
    X = U * np.sqrt(np.clip(p, 0.0, None))
    tau = X.T @ _SPIN_FLIP @ X
    lam = np.sort(np.linalg.svd(tau, compute_uv=False))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def fluctuation_moment(
    rho: np.ndarray, space: ModeSpace, mode: int, k: int, l: int
) -> complex:
    """Normal-ordered fluctuation moment <(do^dag)^k (do)^l>."""
    if k == 0 and l == 0:
        return complex(np.trace(rho))
    a = space.annihilation(mode)
    op = np.linalg.matrix_power(a.conj().T, k) @ np.linalg.matrix_power(a, l)
    return complex(np.trace(op @ rho))


def displaced_normal_moment(
    rho_fluct: np.ndarray,
    space: ModeSpace,
    mode: int,
    amplitude: complex,
    k: int,
    l: int,
) -> complex:
    """<(o^dag)^k o^l> for o = amplitude + do, by binomial expansion."""
    headroom = space.dims[mode] - 1
    if max(k, l) > headroom:
        warnings.warn(
            f"moment order ({k},{l}) exceeds truncation headroom {headroom} "
            f"of mode {mode}; result may be unreliable",
            stacklevel=2,
        )
    z = complex(amplitude)
    total = 0j
    for p in range(k + 1):
        for q in range(l + 1):
            coeff = comb(k, p) * comb(l, q) * np.conj(z) ** (k - p) * z ** (l - q)
            if coeff != 0:
                total += coeff * fluctuation_moment(rho_fluct, space, mode, p, q)
    return total


def g2_zero_delay(
    rho_fluct: np.ndarray, space: ModeSpace, mode: int, amplitude: complex = 0j
) -> float:
    """Zero-delay second-order correlation of the total (classical +
    fluctuation) field of one mode. Returns NaN below the intensity floor."""
    n = np.real(displaced_normal_moment(rho_fluct, space, mode, amplitude, 1, 1))
    if n <= G2_INTENSITY_FLOOR:
        return float("nan")
    m4 = np.real(displaced_normal_moment(rho_fluct, space, mode, amplitude, 2, 2))
    return float(max(0.0, m4) / n**2)


@dataclass
class VisibilityFit:
    """Result of the fringe fit I(t) = I0 [1 + V cos(omega t + phi0)]."""

    V: float
    I0: float
    phi0: float
    omega: float
    residual: float
    V_extrema: float
    confident: bool


@dataclass
class FringeScan:
    """Fringe data versus readout-pulse time, with fitted visibilities."""

    t_R: np.ndarray
    I_detector: np.ndarray
    I_cavity: np.ndarray
    g2_detector: np.ndarray
    fit_detector: Optional[VisibilityFit] = None
    fit_cavity: Optional[VisibilityFit] = None


def visibility(
    t: Sequence[float],
    intensity: Sequence[float],
    omega: float,
    min_points: int = 8,
    min_span_periods: float = 1.5,
) -> VisibilityFit:
    """Least-squares fit of I0 [1 + V cos(omega t + phi0)] with omega fixed.

    Linear in (I0, I0 V cos phi0, -I0 V sin phi0), so the fit is a plain
    lstsq. An extrema-based (Imax-Imin)/(Imax+Imin) estimate is reported
    as a cross-check.
    """
    t = np.asarray(t, dtype=float)
    intensity = np.asarray(intensity, dtype=float)
    if t.size < min_points:
        raise FitError(f"need >= {min_points} points, got {t.size}")
    span = t.max() - t.min()
    period = 2 * np.pi / omega
    if span < min_span_periods * period:
        raise FitError(
            f"t_R span {span:.3g} ns covers < {min_span_periods} beat periods"
        )
    design = np.column_stack([np.ones_like(t), np.cos(omega * t), np.sin(omega * t)])
    coef, _, rank, _ = np.linalg.lstsq(design, intensity, rcond=None)
    if rank < 3:
        raise FitError("degenerate design matrix in fringe fit")
    I0, a, b = coef
    residual = float(np.sqrt(np.mean((design @ coef - intensity) ** 2)))
    amp = float(np.hypot(a, b))
    i_max, i_min = float(intensity.max()), float(intensity.min())
    v_ext = (i_max - i_min) / (i_max + i_min) if (i_max + i_min) > 0 else 0.0
    confident = True
    if I0 <= 0 or amp > I0 * (1 + 1e-9):
        confident = False
    V = float(amp / I0) if I0 > 0 else 0.0
    if I0 > 0 and residual > 0.25 * max(amp, 0.05 * I0):
        confident = False
    phi0 = float(np.arctan2(-b, a))
    return VisibilityFit(
        V=min(V, 1.0) if confident else V,
        I0=float(I0),
        phi0=phi0,
        omega=float(omega),
        residual=residual,
        V_extrema=float(v_ext),
        confident=confident,
    )


def visibility_free_frequency(t, intensity, omega_guess):
    """Diagnostic variant with the fringe frequency left free."""
    from scipy.optimize import curve_fit

    t = np.asarray(t, dtype=float)
    intensity = np.asarray(intensity, dtype=float)

    def model(tt, I0, V, omega, phi0):
        return I0 * (1 + V * np.cos(omega * tt + phi0))

    fixed = visibility(t, intensity, omega_guess)
    p0 = [fixed.I0, max(fixed.V, 1e-3), omega_guess, fixed.phi0]
    try:
        popt, _ = curve_fit(model, t, intensity, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"free-frequency fit failed: {exc}") from exc
    I0, V, omega, phi0 = popt
    resid = float(np.sqrt(np.mean((model(t, *popt) - intensity) ** 2)))
    return VisibilityFit(
        V=abs(float(V)),
        I0=float(I0),
        phi0=float(phi0),
        omega=float(omega),
        residual=resid,
        V_extrema=fixed.V_extrema,
        confident=True,
    )
