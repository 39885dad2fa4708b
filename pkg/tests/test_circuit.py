import math

import numpy as np
import pytest

from qdesign.circuit import (
    CircuitParams,
    EffectiveEnergies,
    diagonalize,
    diagonalize_effective,
    effective_energies,
    ej_at_phase,
    ej_of_flux,
    frequency_vs_bias,
    levels_from_effective,
    transmon_levels,
)
from qdesign.constants import PHI0
from qdesign.errors import DomainError


def test_effective_energies_operating_point(device_params):
    # expected values frozen from a direct arithmetic evaluation of the
    # renormalization formulas
    eff = effective_energies(device_params, 29.0)
    assert eff.ej_tilde == pytest.approx(15.418150, rel=1e-6)
    assert eff.el_tilde == pytest.approx(5.239762, rel=1e-6)
    assert eff.c_param == pytest.approx(1.4712644, rel=1e-6)


def test_effective_energies_sweet_spot(device_params):
    eff = effective_energies(device_params, 45.0)
    assert eff.ej_tilde == pytest.approx(15.988665, rel=1e-6)
    assert eff.el_tilde == pytest.approx(8.431523, rel=1e-6)


def test_effective_energies_large_inductance_limit():
    p = CircuitParams(e_c=0.24, e_j0=20.0, e_l=20.0 * 1e6)
    eff = effective_energies(p, 20.0)
    assert eff.ej_tilde == pytest.approx(1.5 * 20.0, rel=1e-5)
    assert eff.el_tilde < 1e-3


def test_effective_energies_rejects_nonpositive(device_params):
    with pytest.raises(DomainError):
        effective_energies(device_params, 0.0)
    with pytest.raises(DomainError):
        effective_energies(device_params, -3.0)


def test_ej_at_sweet_spot(device_params):
    assert ej_at_phase(device_params, 0.0) == pytest.approx(45.0)


def test_ej_at_half_flux_is_asymmetry_floor(device_params):
    assert ej_at_phase(device_params, 0.5) == pytest.approx(0.32 * 45.0, rel=1e-12)


def test_ej_continuous_at_half_flux(device_params):
    eps = 1e-9
    lo = ej_at_phase(device_params, 0.5 - eps)
    hi = ej_at_phase(device_params, 0.5 + eps)
    assert lo == pytest.approx(hi, abs=1e-6)
    assert lo == pytest.approx(0.32 * 45.0, abs=1e-5)


def test_ej_symmetric_and_periodic(device_params):
    rng = np.random.default_rng(4)
    for flux in rng.uniform(-2.0, 2.0, 25):
        e = ej_at_phase(device_params, flux)
        assert ej_at_phase(device_params, -flux) == pytest.approx(e, rel=1e-14)
        assert ej_at_phase(device_params, flux + 2.0) == pytest.approx(e, rel=1e-12)


def test_ej_symmetric_junctions_reduce_to_cosine():
    p = CircuitParams(e_c=0.24, e_j0=45.0, e_l=128.0, d=0.0)
    for flux in np.linspace(-1.0, 1.0, 41):
        expected = 45.0 * abs(math.cos(math.pi * flux))
        assert ej_at_phase(p, flux) == pytest.approx(expected, abs=1e-12)


def test_flux_offset_applied(device_params):
    import dataclasses

    p = dataclasses.replace(device_params, flux_offset=0.13)
    assert ej_of_flux(p, 0.0) == pytest.approx(ej_at_phase(device_params, 0.13))


def test_levels_sweet_spot_against_measured(device_params):
    # model value 7.825 GHz, measured fundamental 7.6496 GHz; the extracted
    # parameters carry sizable stated errors, hence the 3% band
    e01 = transmon_levels(device_params, 45.0).e01
    assert e01 == pytest.approx(7.825189, rel=1e-6)
    assert abs(e01 - 7.6496) / 7.6496 < 0.03


def test_levels_operating_point(device_params):
    e01 = transmon_levels(device_params, 29.0).e01
    assert e01 == pytest.approx(6.908608, rel=1e-6)
    assert abs(e01 - 6.85) / 6.85 < 0.02


def test_levels_harmonic_limit():
    eff = EffectiveEnergies(ej_tilde=0.0, el_tilde=7.3, c_param=0.0)
    ls = levels_from_effective(0.24, eff, m_max=4)
    spacing = 4.0 * math.sqrt(0.24 * 7.3)
    assert ls.energies == pytest.approx([spacing * m for m in (1, 2, 3, 4)], rel=1e-14)


def test_anharmonicity_independent_of_level_count(device_params):
    # (E_02 - E_01) - E_01 equals -2 Ej_t E_C / (4 X) regardless of m_max
    eff = effective_energies(device_params, 29.0)
    x = eff.ej_tilde / 2.0 + eff.el_tilde
    expected = -2.0 * eff.ej_tilde * device_params.e_c / (4.0 * x)
    for m_max in (2, 3, 6):
        ls = transmon_levels(device_params, 29.0, m_max=m_max)
        assert ls.anharmonicity_abs == pytest.approx(expected, rel=1e-12)


def test_numeric_matches_perturbative_deep_transmon():
    p = CircuitParams(e_c=0.24, e_j0=2400.0, e_l=24000.0)
    pert = transmon_levels(p, p.e_j0).e01
    num = diagonalize(p, p.e_j0).e01
    assert abs(pert - num) / num < 1e-3


def test_numeric_harmonic_spectrum_exact():
    eff = EffectiveEnergies(ej_tilde=0.0, el_tilde=5.0, c_param=0.0)
    ls = diagonalize_effective(0.24, eff, m_max=3)
    spacing = 4.0 * math.sqrt(0.24 * 5.0)
    assert ls.energies == pytest.approx([spacing, 2 * spacing, 3 * spacing], rel=1e-12)


def test_numeric_vs_perturbative_at_device_point(device_params):
    for e_j in (45.0, 29.0):
        pert = transmon_levels(device_params, e_j).e01
        num = diagonalize(device_params, e_j).e01
        assert abs(pert - num) / num < 0.03


def test_operating_point_anharmonicity_both_methods(device_params):
    # both methods give ~2.1% here; the published operating-point figure is
    # 3.4% and is reported alongside, not forced
    pert = transmon_levels(device_params, 29.0)
    num = diagonalize(device_params, 29.0)
    assert abs(pert.anharmonicity_rel) == pytest.approx(0.0207, abs=0.002)
    assert abs(num.anharmonicity_rel) == pytest.approx(abs(pert.anharmonicity_rel), rel=0.05)


def test_dispersion_monotone_in_ej(device_params):
    ejs = np.linspace(45.0, 0.32 * 45.0, 12)
    freqs = [diagonalize(device_params, e) .e01 for e in ejs]
    assert all(a > b for a, b in zip(freqs, freqs[1:]))


def test_basis_size_precondition(device_params):
    with pytest.raises(DomainError):
        diagonalize(device_params, 45.0, m_max=3, basis_size=8)


def test_frequency_vs_bias_period_and_maximum(device_params):
    m = 2.3e-12
    period = 2.0 * PHI0 / m
    f0 = frequency_vs_bias(device_params, m, 0.0)
    assert f0 == pytest.approx(transmon_levels(device_params, 45.0).e01, rel=1e-12)
    assert frequency_vs_bias(device_params, m, period) == pytest.approx(f0, rel=1e-9)
    # 0.9 mA threads one flux quantum of asymmetry: half period, minimum
    f_min = frequency_vs_bias(device_params, m, PHI0 / m)
    assert f_min < f0
    assert f_min == pytest.approx(
        transmon_levels(device_params, 0.32 * 45.0).e01, rel=1e-9
    )


def test_frequency_vs_bias_period_close_to_measured(device_params):
    period_ma = 2.0 * PHI0 / 2.3e-12 * 1e3
    assert period_ma == pytest.approx(1.798, abs=0.001)
    assert abs(period_ma - 1.7) / 1.7 < 0.10


@pytest.mark.xfail(
    strict=True,
    reason="with the extracted parameter set (E_J0=45, E_C=0.24, E_L=128 GHz) and "
    "d=0.32 the renormalized level formula puts the half-flux minimum at 5.39 GHz; "
    "the quoted 6.3 GHz minimum would need d ~ 0.49 under the same parameters",
)
def test_minimum_frequency_quoted_value(device_params):
    f_min = transmon_levels(device_params, ej_at_phase(device_params, 0.5)).e01
    assert f_min == pytest.approx(6.3, rel=0.05)


def test_params_validation():
    with pytest.raises(DomainError):
        CircuitParams(e_c=-0.1, e_j0=45.0, e_l=128.0)
    with pytest.raises(DomainError):
        CircuitParams(e_c=0.24, e_j0=45.0, e_l=128.0, d=1.0)
    with pytest.warns(UserWarning):
        CircuitParams(e_c=4.0, e_j0=45.0, e_l=128.0)
