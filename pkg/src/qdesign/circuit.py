"""Circuit model of the flux-tunable concentric transmon.

The qubit circuit (split junction pair in series with the geometric ring
inductance and shunt capacitance) reduces to the single-mode Hamiltonian

    H = 4 E_C (n - n_g)^2 - Ej_t cos(phi) + El_t phi^2

with renormalized energies

    Ej_t = E_J * 6 E_L^2 / (6 E_J + 2 E_L)^2
    El_t = E_L * 9 E_J^2 / (6 E_J + 2 E_L)^2

where E_L = (hbar/2e)^2 / (2 L_g) and the ring inductance enters as
L = 4 L_g. Energy levels come either from the closed-form quartic
perturbation formula or from numeric diagonalization in the oscillator
basis of the quadratic part. All energies are E/h in GHz; flux arguments
are in units of Phi0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError

# E_J/E_C below this is outside the transmon regime the level formula assumes
TRANSMON_RATIO_WARN = 20.0

DEFAULT_BASIS_SIZE = 60
MAX_BASIS_SIZE = 480
CONVERGENCE_GHZ = 1e-6  # 1 kHz


@dataclass
class CircuitParams:
    """Raw circuit parameters of the tunable concentric transmon.

    e_j0 is the total sweet-spot Josephson energy of both junctions;
    e_l is the inductive energy of the effective ring inductance.
    flux_offset is the static flux offset, in Phi0 units of the
    modulation argument (see :func:`ej_of_flux`).
    """

    e_c: float
    e_j0: float
    e_l: float
    d: float = 0.0
    c_total: float = 81.0  # fF, bookkeeping only
    n_g: float = 0.0
    flux_offset: float = 0.0

    def __post_init__(self):
        if self.e_c <= 0 or self.e_j0 <= 0 or self.e_l <= 0:
            raise DomainError("e_c, e_j0 and e_l must all be positive")
        if not 0.0 <= self.d < 1.0:
            raise DomainError(f"junction asymmetry d={self.d} outside [0, 1)")
        if self.e_j0 / self.e_c < 1.0:
            raise DomainError("e_j0/e_c < 1: not a transmon")
        if self.e_j0 / self.e_c < TRANSMON_RATIO_WARN:
            warnings.warn(
                f"E_J/E_C = {self.e_j0 / self.e_c:.1f} < {TRANSMON_RATIO_WARN:.0f}: "
                "perturbative level formula assumes the transmon regime",
                stacklevel=2,
            )


@dataclass
class EffectiveEnergies:
    """Renormalized Josephson/inductive energies and the ratio c = E_L/(3 E_J)."""

    ej_tilde: float
    el_tilde: float
    c_param: float


@dataclass
class LevelSpectrum:
    """Ground-referenced level energies E_0m (GHz) with anharmonicity."""

    energies: list[float] = field(default_factory=list)

    @property
    def e01(self) -> float:
        return self.energies[0]

    @property
    def anharmonicity_abs(self) -> float:
        """(E_02 - E_01) - E_01, negative for a transmon."""
        if len(self.energies) < 2:
            raise DomainError("need at least two levels for an anharmonicity")
        return self.energies[1] - 2.0 * self.energies[0]

    @property
    def anharmonicity_rel(self) -> float:
        return self.anharmonicity_abs / self.e01


def effective_energies(params: CircuitParams, e_j: float) -> EffectiveEnergies:
    """Renormalized energies for a flux-resolved Josephson energy e_j (GHz)."""
    if e_j <= 0:
        raise DomainError(f"e_j must be positive, got {e_j}")
    if params.e_l <= 0:
        raise DomainError("e_l must be positive")
    den = (6.0 * e_j + 2.0 * params.e_l) ** 2
    return EffectiveEnergies(
        ej_tilde=e_j * 6.0 * params.e_l**2 / den,
        el_tilde=params.e_l * 9.0 * e_j**2 / den,
        c_param=params.e_l / (3.0 * e_j),
    )


def ej_at_phase(params: CircuitParams, flux: float) -> float:
    """Josephson energy at a total modulation flux (Phi0 units), no offset applied.

    E_J(Phi) = e_j0 sqrt(cos^2(pi Phi) + d^2 sin^2(pi Phi)), the stable form of
    e_j0 |cos(pi Phi)| sqrt(1 + d^2 tan^2(pi Phi)). Continuous everywhere; the
    half-integer-flux limit is e_j0 * d.
    """
    x = math.pi * flux
    c, s = math.cos(x), math.sin(x)
    return params.e_j0 * math.sqrt(c * c + params.d**2 * s * s)


def ej_of_flux(params: CircuitParams, flux: float) -> float:
    """Josephson energy with the circuit's static flux offset included."""
    return ej_at_phase(params, flux + params.flux_offset)


def levels_from_effective(e_c: float, eff: EffectiveEnergies, m_max: int = 3) -> LevelSpectrum:
    """Perturbative level energies for given renormalized energies.

    E_0m = 4 sqrt(E_C (Ej_t/2 + El_t)) m - (Ej_t E_C / (4 (Ej_t/2 + El_t))) (m^2 + m)
    """
    if m_max < 1:
        raise DomainError("m_max must be >= 1")
    x = eff.ej_tilde / 2.0 + eff.el_tilde
    if x <= 0:
        raise DomainError("Ej_t/2 + El_t must be positive")
    s = 4.0 * math.sqrt(e_c * x)
    a = eff.ej_tilde * e_c / (4.0 * x)
    ms = np.arange(1, m_max + 1)
    return LevelSpectrum(energies=list(s * ms - a * (ms**2 + ms)))


def transmon_levels(params: CircuitParams, e_j: float, m_max: int = 3) -> LevelSpectrum:
    """Perturbative level energies at a flux-resolved Josephson energy."""
    return levels_from_effective(params.e_c, effective_energies(params, e_j), m_max)


def _oscillator_operators(e_c: float, x_quad: float, n: int):
    """phi and charge operators in the number basis of 4 E_C n^2 + x_quad phi^2."""
    lam = (e_c / x_quad) ** 0.25
    sq = np.sqrt(np.arange(1, n))
    phi = np.zeros((n, n))
    phi[np.arange(n - 1), np.arange(1, n)] = lam * sq
    phi[np.arange(1, n), np.arange(n - 1)] = lam * sq
    # n = i (a+ - a) / (2 lam); purely imaginary, store the real antisymmetric part
    chg = np.zeros((n, n))
    chg[np.arange(n - 1), np.arange(1, n)] = -sq / (2.0 * lam)
    chg[np.arange(1, n), np.arange(n - 1)] = sq / (2.0 * lam)
    return phi, chg


def _eigvals_at(e_c: float, n_g: float, eff: EffectiveEnergies, basis_size: int, k: int):
    phi, chg = _oscillator_operators(e_c, eff.ej_tilde / 2.0 + eff.el_tilde, basis_size)
    # cos(phi) through the spectral decomposition of the tridiagonal phi matrix
    w, v = np.linalg.eigh(phi)
    cos_phi = (v * np.cos(w)) @ v.T
    pot = -eff.ej_tilde * cos_phi + eff.el_tilde * (phi @ phi)
    if n_g == 0.0:
        # charge op is i*chg with chg real antisymmetric, so n^2 = -chg@chg is real
        ham = -4.0 * e_c * (chg @ chg) + pot
    else:
        n_op = 1j * chg - n_g * np.eye(basis_size)
        ham = 4.0 * e_c * (n_op @ n_op) + pot
    vals = np.linalg.eigvalsh(ham)
    return vals[: k + 1] - vals[0]


def diagonalize_effective(
    e_c: float,
    eff: EffectiveEnergies,
    n_g: float = 0.0,
    m_max: int = 3,
    basis_size: int = DEFAULT_BASIS_SIZE,
) -> LevelSpectrum:
    """Numeric level energies for given renormalized energies.

    Diagonalizes 4 E_C (n - n_g)^2 - Ej_t cos(phi) + El_t phi^2 in the
    harmonic-oscillator number basis of its quadratic part (the phi^2 term
    breaks 2 pi periodicity, so a charge basis would be invalid). The basis
    size is doubled, up to 480 states, until E_01 and E_02 move by less
    than 1 kHz; failing that a ConvergenceError carries the residual.
    """
    if m_max < 1:
        raise DomainError("m_max must be >= 1")
    if basis_size < 3 * m_max:
        raise DomainError(f"basis_size must be at least 3*m_max = {3 * m_max}")
    if eff.ej_tilde / 2.0 + eff.el_tilde <= 0:
        raise DomainError("quadratic part of the Hamiltonian is not confining")

    n = basis_size
    prev = _eigvals_at(e_c, n_g, eff, n, max(m_max, 2))
    resid = math.inf
    while n <= MAX_BASIS_SIZE // 2:
        n *= 2
        cur = _eigvals_at(e_c, n_g, eff, n, max(m_max, 2))
        resid = max(abs(cur[1] - prev[1]), abs(cur[2] - prev[2]))
        if resid < CONVERGENCE_GHZ:
            return LevelSpectrum(energies=list(cur[1 : m_max + 1]))
        prev = cur
    raise ConvergenceError(
        f"levels not converged to 1 kHz at basis_size={MAX_BASIS_SIZE}",
        residual=float(resid),
    )


def diagonalize(
    params: CircuitParams,
    e_j: float,
    m_max: int = 3,
    basis_size: int = DEFAULT_BASIS_SIZE,
) -> LevelSpectrum:
    """Numeric level energies at a flux-resolved Josephson energy."""
    eff = effective_energies(params, e_j)
    return diagonalize_effective(params.e_c, eff, params.n_g, m_max, basis_size)


def frequency_vs_bias(params: CircuitParams, m_bias: float, i_bias: float) -> float:
    """Qubit transition frequency E_01 (GHz) at a bias-line current.

    m_bias is the net gradiometric mutual inductance (henry) and i_bias the
    bias current (ampere). The bias current induces a flux asymmetry
    m_bias * i_bias between the gradiometer loops; the modulation argument of
    :func:`ej_of_flux` is half that asymmetry, so the dispersion is periodic
    in i_bias with period 2 Phi0 / m_bias.
    """
    from .constants import PHI0

    if m_bias <= 0:
        raise DomainError("m_bias must be positive")
    flux = m_bias * i_bias / (2.0 * PHI0)
    e_j = ej_of_flux(params, flux)
    return transmon_levels(params, e_j, m_max=1).e01
