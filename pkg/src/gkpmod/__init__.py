"""gkpmod: modular quadrature measurements for grid-state preparation.

Simulation of the photon-pressure protocol that imprints the modular value
of a target oscillator quadrature onto a coherent ancilla, plus the circuit
parameter derivation, drive synthesis, noise channels and the time-
integrated release model.
"""

__version__ = "0.1.0"
