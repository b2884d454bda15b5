"""Run configuration: a single JSON document with unit-bearing field names.

Every physical field carries its unit in its name (MHz, kHz, ns, or a
kappa-relative multiple), matching how the device parameters are usually
quoted; conversion to the internal rad/ns system happens in one place
here.  A config round-trips losslessly through JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict, replace
from typing import List, Optional

import numpy as np

from .errors import ParameterError
from .liouville import PulseSpec, SystemParams
from .protocol import ProtocolSchedule

TWO_PI = 2.0 * math.pi

# rad/ns per unit: MHz -> 2pi*1e-3, kHz -> 2pi*1e-6
MHZ = TWO_PI * 1e-3
KHZ = TWO_PI * 1e-6


@dataclass(frozen=True)
class RunConfig:
    # mode frequencies and couplings
    omega1_over_2pi_MHz: float = 700.0
    omega2_over_2pi_MHz: float = 980.0
    g1_over_2pi_kHz: float = 72.0
    g2_over_2pi_kHz: float = 84.0
    # linewidths
    kappa_over_2pi_MHz: float = 200.0
    kappa_d_over_kappa: float = 0.1
    zeta_over_kappa: float = 0.1
    gamma1_over_2pi_kHz: float = 4.4
    gamma2_over_2pi_kHz: float = 5.4
    # environment
    n_th: float = 0.0
    eta_over_kappa: float = 0.0
    # truncation
    dims: List[int] = field(default_factory=lambda: [3, 3, 3, 3])
    # pulses (amplitudes in units of kappa, times in ns)
    write_amplitude_kappa: float = 2.5
    write_t0_ns: float = 50.0
    write_sigma_ns: float = 12.5
    read_amplitude_kappa: float = 150.0
    read_sigma_ns: float = 17.5
    # schedule
    write_t_end_ns: float = 160.0
    checkpoint_dt_ns: float = 0.5
    tau_cut_ns: float = 52.5
    herald_t_P_ns: Optional[float] = None
    # fringe grid
    t_R_start_ns: float = 70.0
    t_R_span_ns: float = 7.5
    t_R_points: int = 12
    # sweep grids
    thermal_grid: List[float] = field(default_factory=lambda: [0.0, 0.02, 0.05, 0.1])
    dephasing_grid_kappa: List[float] = field(
        default_factory=lambda: [1e-7, 1e-4, 1e-3, 1e-2]
    )
    # numerics
    tol: float = 1e-8
    readout_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.omega2_over_2pi_MHz <= self.omega1_over_2pi_MHz:
            raise ParameterError("omega2 must exceed omega1")
        if self.t_R_points < 4:
            raise ParameterError("t_R_points must be at least 4")
        if len(self.dims) != 4 or any(int(d) < 2 for d in self.dims):
            raise ParameterError("dims must be four integers >= 2")

    # -- unit conversion ------------------------------------------------

    @property
    def kappa(self) -> float:
        return self.kappa_over_2pi_MHz * MHZ

    def system_params(self, n_th: Optional[float] = None,
                      eta_over_kappa: Optional[float] = None) -> SystemParams:
        k = self.kappa
        eok = self.eta_over_kappa if eta_over_kappa is None else eta_over_kappa
        return SystemParams(
            Omega1=self.omega1_over_2pi_MHz * MHZ,
            Omega2=self.omega2_over_2pi_MHz * MHZ,
            g1=self.g1_over_2pi_kHz * KHZ,
            g2=self.g2_over_2pi_kHz * KHZ,
            kappa=k,
            kappa_d=self.kappa_d_over_kappa * k,
            zeta=self.zeta_over_kappa * k,
            gamma1=self.gamma1_over_2pi_kHz * KHZ,
            gamma2=self.gamma2_over_2pi_kHz * KHZ,
            n_th=self.n_th if n_th is None else n_th,
            eta=eok * k,
        )

    @property
    def mean_mech_freq(self) -> float:
        return 0.5 * (self.omega1_over_2pi_MHz + self.omega2_over_2pi_MHz) * MHZ

    def write_pulse(self, amplitude_kappa: Optional[float] = None) -> PulseSpec:
        a = self.write_amplitude_kappa if amplitude_kappa is None else amplitude_kappa
        return PulseSpec(
            amplitude=a * self.kappa,
            t0=self.write_t0_ns,
            sigma=self.write_sigma_ns,
            detuning=+self.mean_mech_freq,
        )

    def read_pulse(self, amplitude_kappa: Optional[float] = None) -> PulseSpec:
        a = self.read_amplitude_kappa if amplitude_kappa is None else amplitude_kappa
        return PulseSpec(
            amplitude=a * self.kappa,
            t0=0.0,
            sigma=self.read_sigma_ns,
            detuning=-self.mean_mech_freq,
        )

    def schedule(
        self,
        write_amplitude_kappa: Optional[float] = None,
        read_amplitude_kappa: Optional[float] = None,
    ) -> ProtocolSchedule:
        return ProtocolSchedule(
            write=self.write_pulse(write_amplitude_kappa),
            readout=self.read_pulse(read_amplitude_kappa),
            write_t_end=self.write_t_end_ns,
            checkpoint_dt=self.checkpoint_dt_ns,
            tau_cut=self.tau_cut_ns,
            herald_t_P=self.herald_t_P_ns,
        )

    def t_R_values(self) -> np.ndarray:
        return self.t_R_start_ns + np.linspace(
            0.0, self.t_R_span_ns, self.t_R_points
        )

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ParameterError("config JSON must be an object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **kw)
