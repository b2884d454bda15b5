"""Walk through the write pulse and the heralding step.

Runs the blue-detuned write pulse at the default device parameters, scans
the heralding time t_P, and prints the operating point: the concurrence of
the heralded two-phonon state, the cavity occupation, and the implied
click rate. Takes ~30 s single core.

Usage: python3 demos/demo_herald.py
"""

import numpy as np

from phonon_bell import (
    RunConfig,
    build_mode_space,
    herald_scan,
    run_write,
    thermal_state,
)

cfg = RunConfig()
space = build_mode_space(cfg.dims)
params = cfg.system_params()

print("device: Omega/2pi = %.2f, %.2f GHz; g/2pi = %.0f, %.0f kHz; "
      "kappa/2pi = %.0f MHz" % (
          cfg.omega1_over_2pi_MHz / 1e3, cfg.omega2_over_2pi_MHz / 1e3,
          cfg.g1_over_2pi_kHz, cfg.g2_over_2pi_kHz,
          cfg.kappa_over_2pi_MHz))
print("write pulse: A = %.1f kappa, t0 = %.0f ns, sigma = %.1f ns, "
      "detuned at +(Omega1+Omega2)/2" % (
          cfg.write_amplitude_kappa, cfg.write_t0_ns, cfg.write_sigma_ns))

initial = thermal_state(space, (params.n_th, params.n_th))
traj = run_write(params, cfg.schedule(), initial, space, tol=cfg.tol)
scan = herald_scan(traj)

i = scan.best_index()
rate = params.kappa * scan.n_c[i] * 1e9  # kappa in rad/ns -> clicks per second
print()
print("heralding scan over t_P (every %.1f ns up to %.0f ns):"
      % (cfg.checkpoint_dt_ns, cfg.write_t_end_ns))
for j in range(0, len(scan.t_P), 20):
    c = scan.C[j]
    print("  t_P = %5.1f ns   n_c = %.3e   C = %s"
          % (scan.t_P[j], scan.n_c[j], "---" if np.isnan(c) else "%.4f" % c))
print()
print("operating point: t_P = %.1f ns" % scan.t_P[i])
print("  concurrence C          = %.4f" % scan.C[i])
print("  cavity occupation n_c  = %.3e" % scan.n_c[i])
print("  herald rate kappa*n_c  = %.0f /s" % rate)
