"""Nelson potential: from classical to quantum thermodynamics across a chaotic system.

V(x, y) = (y - x^2/2)^2 + mu x^2.  At mu = 2 the semiclassical energy lands
on the finite-difference quantum value over the whole theta range, to a few
parts in a thousand.  The heat capacity is a small difference of two large
moments, and below theta ~ 2 it loses the quantum curve even here; the
numbers are stable under grid refinement, so this is the method and not
the quadrature.  At mu = 0.5 the well is shallow along x, most trajectories
reach a caustic by theta = 2, and both the energy and the heat capacity
drift away from the quantum values.  The drift is printed, not asserted.
The last block counts regular islands and chaotic orbits on a Poincare
section at E = 4.8 for mu = 2.

Run:  python demos/nelson_bridging.py    (about three minutes)
"""

import numpy as np

from thermal_wigner import classical_averages, fd_eigensolver_2d, nelson, poincare_section
from thermal_wigner import spectrum_thermal_averages, thermal_observables
from thermal_wigner.reference import classify_orbits

thetas = [0.5, 1.0, 2.0, 3.0, 5.0]

for mu in (2.0, 0.5):
    model = nelson(mu)
    spec = fd_eigensolver_2d(model.potential)
    cutoff = np.log(1e8) / (spec.energies[-1] - spec.energies[0])
    print(f"Nelson, mu = {mu}: {len(spec)} FD levels, quantum averages trusted for theta > {cutoff:.2f}")
    print(f"{'theta':>6} {'E_sc':>8} {'E_qm':>8} {'E_cl':>8} {'c_sc':>8} {'c_qm':>8}  discarded")
    for r in thermal_observables(model, thetas):
        e_qm, c_qm = spectrum_thermal_averages(spec, r.theta)
        e_cl, _ = classical_averages(model, r.theta)
        flag = "" if r.theta > cutoff else "  (below quantum cutoff)"
        print(f"{r.theta:6.2f} {r.mean_energy:8.4f} {e_qm:8.4f} {e_cl:8.4f} {r.specific_heat:8.4f} {c_qm:8.4f}"
              f"  {r.discarded_fraction:9.2f}{flag}")
    print()

section = poincare_section(mu=2.0, energy=4.8, n_trajectories=12, t_max=2000.0, seed=0)
labels, _ = classify_orbits(section)
print("Poincare section, mu = 2, E = 4.8, 12 orbits")
for kind in ("island", "chaotic", "other"):
    print(f"  {kind:8s} {labels.count(kind)}")
