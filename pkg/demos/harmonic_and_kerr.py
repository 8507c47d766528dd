"""Harmonic oscillator and Kerr oscillator: the two cases with closed forms.

For the oscillator the semiclassical thermal symbol is exact, so the trace
averages reproduce hbar w/2 coth(theta/2) to quadrature precision.  For the
Kerr oscillator the trajectories stay on circles and only the frequency
depends on the action; the energy still approaches the quantum curve, and at
low temperature the estimated heat capacity turns negative, which the engine
flags instead of hiding.

Run:  python demos/harmonic_and_kerr.py
"""

import numpy as np

from thermal_wigner import harmonic_oscillator, kerr, spectrum_thermal_averages, thermal_observables
from thermal_wigner.symbols import normal_form_spectrum

thetas = [0.1, 0.5, 1.0, 2.0, 5.0]

print("harmonic oscillator, omega = 1")
print(f"{'theta':>6} {'E_sc':>12} {'E_exact':>12} {'c_sc':>10} {'c_exact':>10}")
for r in thermal_observables(harmonic_oscillator(1.0), thetas):
    t = r.theta
    e = 0.5 / np.tanh(t / 2)
    c = (t / 2) ** 2 / np.sinh(t / 2) ** 2
    print(f"{t:6.2f} {r.mean_energy:12.8f} {e:12.8f} {r.specific_heat:10.6f} {c:10.6f}")

for chi in (0.1, 0.5):
    model = kerr(1.0, chi)
    spec = normal_form_spectrum(model.spectrum_function(), 200)
    print(f"\nKerr oscillator, chi = {chi}")
    print(f"{'theta':>6} {'E_sc':>10} {'E_qm':>10} {'c_sc':>10} {'c_qm':>10}  discarded  note")
    for r in thermal_observables(model, thetas):
        e_qm, c_qm = spectrum_thermal_averages(spec, r.theta)
        note = "negative heat capacity" if r.negative_heat else ""
        print(f"{r.theta:6.2f} {r.mean_energy:10.5f} {e_qm:10.5f} {r.specific_heat:10.5f} {c_qm:10.5f}"
              f"  {r.discarded_fraction:9.2f}  {note}")
