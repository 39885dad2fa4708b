"""Physical constants (CODATA 2018) used throughout the toolkit.

All circuit energies in this package are stored as ordinary frequencies
(E/h), in GHz unless noted. Angular frequencies (rad/s) appear only inside
the loss-rate formulas and are always converted explicitly.
"""

import math

# Planck constant [J s] and reduced Planck constant
H = 6.62607015e-34
HBAR = H / (2.0 * math.pi)

# elementary charge [C]
E_CHARGE = 1.602176634e-19

# magnetic flux quantum h/2e [Wb]
PHI0 = 2.067833848e-15

# vacuum permeability [H/m]
MU0 = 1.25663706212e-6

TWO_PI = 2.0 * math.pi


def inductive_energy_ghz(l_henry: float) -> float:
    """E_L/h in GHz for an inductance L, with E_L = (hbar/2e)^2 / (2L)."""
    e_joule = (HBAR / (2.0 * E_CHARGE)) ** 2 / (2.0 * l_henry)
    return e_joule / (H * 1e9)


def josephson_energy_ghz(i_c_ampere: float) -> float:
    """E_J/h in GHz for a junction critical current, E_J = (hbar/2e) I_c."""
    return (HBAR / (2.0 * E_CHARGE)) * i_c_ampere / (H * 1e9)


def critical_current_ampere(e_j_ghz: float) -> float:
    """Inverse of :func:`josephson_energy_ghz`."""
    return e_j_ghz * (H * 1e9) / (HBAR / (2.0 * E_CHARGE))


def charging_energy_ghz(c_farad: float) -> float:
    """E_C/h in GHz for a capacitance C, with E_C = e^2 / (2C)."""
    return E_CHARGE**2 / (2.0 * c_farad) / (H * 1e9)
