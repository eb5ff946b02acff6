"""shadowcert: certified two-sided bounds for measurement-conditioned state ensembles.

Simulates a noisy Floquet Ising chain, builds its projected ensemble, estimates
measurable cross-correlators with classical shadows, and turns them into
rigorous lower/upper bounds on ensemble averages (purity, quadratic
observables, entropies, frame potential, design distance), each validated
against brute-force enumeration at desk scale.
"""

__version__ = "0.1.0"
