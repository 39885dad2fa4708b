"""Relaxation-channel budget: Purcell decay, dielectric defect bath, loss tangents.

All rates are returned in 1/s. Angular frequencies (rad/s) are used inside
the formulas; constructors document which fields are angular and which are
ordinary. The report layer converts rates to microsecond lifetimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import integrate

from .constants import E_CHARGE, HBAR, TWO_PI
from .errors import ConvergenceError, DomainError

# Relative tolerance of the defect-bath integral
TLF_RTOL = 1e-4


@dataclass
class PurcellInputs:
    """Inputs for the three Purcell channels.

    omega_q, omega_r are angular (rad/s); g is ordinary (Hz, the g/2pi value);
    m_bias in henry, l_total in henry, c_coupling and c_total in farad,
    z0 in ohm.
    """

    omega_q: float
    omega_r: float
    q_loaded: float
    g: float
    m_bias: float
    l_total: float
    c_coupling: float
    c_total: float
    z0: float = 50.0

    def __post_init__(self):
        for name in ("omega_q", "omega_r", "q_loaded", "l_total", "c_total", "z0"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        for name in ("g", "m_bias", "c_coupling"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")

    @property
    def kappa(self) -> float:
        """Resonator linewidth omega_r / Q_L (rad/s)."""
        return self.omega_r / self.q_loaded

    @property
    def detuning(self) -> float:
        """|omega_q - omega_r| (rad/s)."""
        return abs(self.omega_q - self.omega_r)


@dataclass
class TlfModel:
    """Incoherent two-level-fluctuator bath.

    rho0 is the defect density per um^3 per GHz (ordinary frequency), d0 the
    maximum dipole moment in e*Angstrom, e_field the weighted mean field in
    V/m, volume the lossy oxide volume in m^3.  The dipole distribution
    P(p) = A sqrt(1-p^2)/p lives on [p_min, 1] and the defect distribution
    P(w, th) = B w^alpha cos^alpha(th)/sin(th) on [0, omega_tlf_max] x
    [theta_min, pi/2]; A and B normalize each to 1 on its truncated domain.
    Both densities diverge logarithmically at their lower edge, so the
    cutoffs are physical inputs, not numerical knobs; the defaults reproduce
    the reference budget below.
    """

    rho0: float = 4e2
    d0: float = 1.6
    e_field: float = 2.3
    volume: float = 50e-18
    alpha: float = 0.3
    gamma2: float = 10e6  # ordinary Hz
    omega_tlf_max: float = 15e9  # ordinary Hz
    p_min: float = 1e-2
    theta_min: float = 1e-2  # rad

    def __post_init__(self):
        if self.rho0 < 0:
            raise DomainError("rho0 must be non-negative")
        if not 0.0 < self.p_min < 1.0:
            raise DomainError("p_min must lie in (0, 1)")
        if not 0.0 < self.theta_min < math.pi / 2:
            raise DomainError("theta_min must lie in (0, pi/2)")
        if self.alpha <= 0:
            raise DomainError("alpha must be positive")
        if self.gamma2 <= 0 or self.omega_tlf_max <= 0:
            raise DomainError("gamma2 and omega_tlf_max must be positive")

    @property
    def n_defects(self) -> float:
        """Number of interacting defects, rho0 * V * (omega_tlf/2pi).

        rho0 counts defects per volume per ordinary frequency, so the
        bandwidth factor is the cutoff in GHz and the volume in um^3.
        """
        return self.rho0 * (self.volume / 1e-18) * (self.omega_tlf_max / 1e9)


def purcell_single_mode(inputs: PurcellInputs) -> float:
    """Dispersive single-mode decay into the readout resonator.

    Gamma = kappa (g/Delta)^2 with kappa = omega_r/Q_L, everything angular.
    """
    delta = inputs.detuning
    if delta == 0:
        raise DomainError("zero qubit-resonator detuning: dispersive formula invalid")
    g_ang = TWO_PI * inputs.g
    return inputs.kappa * (g_ang / delta) ** 2


def purcell_inductive(inputs: PurcellInputs) -> float:
    """Decay into the flux bias line through the mutual inductance.

    Gamma = omega_q^2 M^2 / (L Z0).
    """
    return inputs.omega_q**2 * inputs.m_bias**2 / (inputs.l_total * inputs.z0)


def purcell_capacitive(inputs: PurcellInputs) -> float:
    """Decay through the stray capacitance to the bias line.

    Gamma = omega_q^2 C_c^2 Z0 / C.
    """
    return inputs.omega_q**2 * inputs.c_coupling**2 * inputs.z0 / inputs.c_total


def _tlf_normalizations(model: TlfModel):
    a_inv, a_err = integrate.quad(
        lambda p: math.sqrt(1.0 - p * p) / p, model.p_min, 1.0
    )
    th_inv, th_err = integrate.quad(
        lambda th: math.cos(th) ** model.alpha / math.sin(th),
        model.theta_min,
        math.pi / 2,
    )
    wmax = TWO_PI * model.omega_tlf_max
    w_inv = wmax ** (1.0 + model.alpha) / (1.0 + model.alpha)
    return 1.0 / a_inv, 1.0 / (th_inv * w_inv)


def tlf_rate(model: TlfModel, omega_q: float) -> float:
    """Mean relaxation rate (1/s) induced by the incoherent defect bath.

    Evaluates

        N * int dp P(p) (p |E| d0 / hbar)^2
          * int dw int dth P(w, th) sin^2(th) g2 / (g2^2 + (w - w_q)^2)

    by nested adaptive quadrature (theta innermost, then the defect
    frequency with forced subdivision at w_q +- {1, 10, 100} g2 so the
    narrow Lorentzian is resolved, dipole moment outermost) to a relative
    tolerance of 1e-4. omega_q is angular (rad/s).
    """
    if model.rho0 == 0.0:
        return 0.0
    g2 = TWO_PI * model.gamma2
    wmax = TWO_PI * model.omega_tlf_max
    d0_si = model.d0 * E_CHARGE * 1e-10
    coupling = (d0_si * model.e_field / HBAR) ** 2
    a_norm, b_norm = _tlf_normalizations(model)

    def theta_integral(w):
        lor = g2 / (g2 * g2 + (w - omega_q) ** 2)
        val, _ = integrate.quad(
            lambda th: math.cos(th) ** model.alpha * math.sin(th),
            model.theta_min,
            math.pi / 2,
            epsrel=TLF_RTOL / 10.0,
        )
        return w**model.alpha * lor * val

    breakpoints = sorted(
        {min(max(omega_q + s * k * g2, 0.0), wmax) for s in (-1, 1) for k in (1, 10, 100)}
    )

    def omega_integral():
        val, err = integrate.quad(
            theta_integral,
            0.0,
            wmax,
            points=breakpoints,
            limit=400,
            epsrel=TLF_RTOL / 10.0,
        )
        if val != 0.0 and err / abs(val) > TLF_RTOL:
            raise ConvergenceError(
                "defect-frequency quadrature did not reach the requested tolerance",
                residual=err / abs(val),
            )
        return val

    w_part = omega_integral()

    def p_integrand(p):
        # (P(p)/A) * p^2 = p sqrt(1 - p^2)
        return p * math.sqrt(1.0 - p * p)

    p_part, p_err = integrate.quad(p_integrand, model.p_min, 1.0, epsrel=TLF_RTOL / 10.0)
    if p_part != 0.0 and p_err / p_part > TLF_RTOL:
        raise ConvergenceError(
            "dipole-moment quadrature did not reach the requested tolerance",
            residual=p_err / p_part,
        )
    return model.n_defects * coupling * a_norm * p_part * b_norm * w_part


def loss_tangent_rate(delta_eff: float, omega_q: float) -> float:
    """Relaxation rate from an effective dielectric loss tangent, Gamma = delta * omega_q."""
    if delta_eff < 0:
        raise DomainError("delta_eff must be non-negative")
    return delta_eff * omega_q


def effective_loss_tangent(fill_factor: float, delta_material: float) -> float:
    """Participation-ratio composition delta_eff = fill * delta_material."""
    if fill_factor < 0 or delta_material < 0:
        raise DomainError("fill factor and material loss tangent must be non-negative")
    return fill_factor * delta_material


@dataclass
class LossBudget:
    """Named channel rates (1/s) mirrored by the budget report."""

    purcell_single_mode: float
    purcell_inductive: float
    purcell_capacitive: float
    tlf: float
    radiative: float
    extras: list[float] = field(default_factory=list)

    @property
    def purcell_total(self) -> float:
        return self.purcell_single_mode + self.purcell_inductive + self.purcell_capacitive

    @property
    def gamma_sigma(self) -> float:
        return self.purcell_total + self.tlf + self.radiative + sum(self.extras)

    def lifetimes_us(self) -> dict[str, float]:
        """Reciprocal lifetimes in microseconds, one entry per channel plus totals."""

        def t(rate):
            return math.inf if rate == 0.0 else 1e6 / rate

        out = {
            "purcell_single_mode": t(self.purcell_single_mode),
            "purcell_inductive": t(self.purcell_inductive),
            "purcell_capacitive": t(self.purcell_capacitive),
            "purcell_total": t(self.purcell_total),
            "tlf": t(self.tlf),
            "radiative": t(self.radiative),
        }
        for i, r in enumerate(self.extras):
            out[f"extra_{i}"] = t(r)
        out["total"] = t(self.gamma_sigma)
        return out


def budget(
    inputs: PurcellInputs,
    model: TlfModel,
    radiative_rate: float = 1e4,
    extras: list[float] | None = None,
) -> LossBudget:
    """Evaluate every channel and combine them into the reciprocal-sum budget."""
    if radiative_rate < 0:
        raise DomainError("radiative_rate must be non-negative")
    return LossBudget(
        purcell_single_mode=purcell_single_mode(inputs),
        purcell_inductive=purcell_inductive(inputs),
        purcell_capacitive=purcell_capacitive(inputs),
        tlf=tlf_rate(model, inputs.omega_q),
        radiative=radiative_rate,
        extras=list(extras or []),
    )


def budget_from_lifetimes_us(lifetimes: list[float]) -> float:
    """Reciprocal-sum lifetime (us) of a plain list of channel lifetimes (us)."""
    if not lifetimes or any(t <= 0 for t in lifetimes):
        raise DomainError("lifetimes must be positive")
    return 1.0 / sum(1.0 / t for t in lifetimes)
