"""Circuit-parameter extraction from spectroscopy data.

Two routes are combined: the multiphoton triple (f01, f02/2, f03/3) measured
at the flux sweet spot pins the level formula, and the flux dispersion of
the fundamental transition pins the junction asymmetry and the bias-line
mutual. The level formula collapses to two scalars,

    S = 4 sqrt(E_C X),  A = E_C E_L / (2 (3 E_J + E_L)),  E_0m = S m - A (m^2 + m)

with X = (3/4) E_J E_L / (3 E_J + E_L), which gives closed-form seeds
E_J = S^2/(24 A) and E_L = S^2/(4 (E_C - 2A)); a damped Gauss-Newton pass
then balances all three equations. Because (S, A) exhaust the information
in the triple, one of E_C or E_L must be supplied from elsewhere (the seed,
or the flux fit in the joint mode).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .circuit import CircuitParams, transmon_levels
from .constants import PHI0, josephson_energy_ghz
from .errors import ConvergenceError, DataFormatError, DomainError

D_MAX = 0.99  # junction asymmetry bound enforced through the logistic transform

_FLUX_FREE_DEFAULT = ("e_j0", "d", "m_bias", "flux_offset")
_FLUX_ALL = ("e_j0", "d", "m_bias", "flux_offset", "e_c", "e_l")


@dataclass
class MultiphotonSet:
    """Fundamental and lowest multiphoton transition frequencies (GHz)."""

    f01: float
    f02_half: float
    f03_third: float

    def __post_init__(self):
        if not self.f01 > self.f02_half > self.f03_third:
            raise DomainError(
                "expected f01 > f02/2 > f03/3 (negative anharmonicity ordering)"
            )


@dataclass
class SpectroscopyDataset:
    """Measured (bias current, transition frequency) points.

    bias_ma in mA, freq_ghz in GHz, weight defaults to 1, order is the
    transition order m of each point (1 for the fundamental line, 2 for the
    two-photon line).
    """

    bias_ma: np.ndarray
    freq_ghz: np.ndarray
    weight: np.ndarray = None
    order: np.ndarray = None

    def __post_init__(self):
        self.bias_ma = np.asarray(self.bias_ma, float)
        self.freq_ghz = np.asarray(self.freq_ghz, float)
        n = len(self.bias_ma)
        if self.weight is None:
            self.weight = np.ones(n)
        if self.order is None:
            self.order = np.ones(n, dtype=int)
        self.weight = np.asarray(self.weight, float)
        self.order = np.asarray(self.order, int)
        if not (len(self.freq_ghz) == len(self.weight) == len(self.order) == n):
            raise DomainError("dataset columns have mismatched lengths")
        if n < 6:
            raise DomainError("need at least 6 points for a 4-parameter flux fit")
        if not np.all(np.isfinite(self.bias_ma)):
            raise DomainError("bias currents must be finite")
        if np.any(self.freq_ghz <= 0):
            raise DomainError("frequencies must be positive")
        if not np.all(np.isin(self.order, (1, 2))):
            raise DomainError("transition order must be 1 or 2")

    def __len__(self):
        return len(self.bias_ma)


@dataclass
class SweetSpotSolution:
    e_c: float
    e_j: float
    e_l: float
    residuals_ghz: tuple[float, float, float]
    iterations: int
    converged: bool


@dataclass
class FitResult:
    """Flux-spectrum fit output.

    params holds the fitted circuit parameters, m_bias_ph the bias-line
    mutual in pH. stderr maps each free parameter name to its one-sigma
    standard error from the residual covariance.
    """

    params: CircuitParams
    m_bias_ph: float
    residual_rms: float
    stderr: dict[str, float]
    iterations: int
    converged: bool
    free: tuple[str, ...] = ()
    seed: dict = field(default_factory=dict)
    at_bound: bool = False


def _sa_from_triple(mp: MultiphotonSet):
    a = mp.f01 - mp.f02_half
    if a <= 0:
        raise DomainError("zero or positive anharmonicity: no transmon solution")
    return mp.f01 + 2.0 * a, a


def _forward_e0m(e_c, e_j, e_l, ms):
    d = 3.0 * e_j + e_l
    x = 0.75 * e_j * e_l / d
    a = 0.5 * e_c * e_l / d
    s = 4.0 * math.sqrt(e_c * x)
    return s * ms - a * (ms**2 + ms)


def _jac_e0m(e_c, e_j, e_l, ms, wrt):
    """Analytic columns of d E_0m / d(theta) for theta in wrt."""
    d = 3.0 * e_j + e_l
    x = 0.75 * e_j * e_l / d
    s_fac = 2.0 * math.sqrt(e_c / x)  # dS/dX
    cols = []
    for name in wrt:
        if name == "e_j":
            dx = 0.75 * e_l**2 / d**2
            da = -1.5 * e_c * e_l / d**2
        elif name == "e_l":
            dx = 2.25 * e_j**2 / d**2
            da = 1.5 * e_c * e_j / d**2
        elif name == "e_c":
            dx = 0.0
            da = 0.5 * e_l / d
            cols.append(2.0 * math.sqrt(x / e_c) * ms - da * (ms**2 + ms))
            continue
        else:
            raise ValueError(name)
        cols.append(s_fac * dx * ms - da * (ms**2 + ms))
    return np.column_stack(cols)


def solve_sweet_spot(
    mp: MultiphotonSet,
    e_c_seed: float,
    e_l: float | None = None,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> SweetSpotSolution:
    """Solve the three level equations for the sweet-spot circuit parameters.

    With e_l omitted, E_C is resolved by the seed (held there) and (E_J, E_L)
    are solved; with e_l given (e.g. from a flux fit), (E_C, E_J) are solved
    starting from the seed. Either way the closed-form inversion of the
    m = 1, 2 equations provides the starting point and a damped Newton
    iteration balances all three equations in the least-squares sense.
    For model-consistent triples the residuals vanish to solver precision;
    measured triples keep a finite residual that is reported, not hidden.
    """
    if e_c_seed <= 0:
        raise DomainError("e_c_seed must be positive")
    s, a = _sa_from_triple(mp)
    e_j0 = s * s / (24.0 * a)

    if e_l is None:
        e_c = e_c_seed
        if e_c - 2.0 * a <= 0:
            raise DomainError("seed E_C too small: E_C - 2 (f01 - f02/2) must be positive")
        theta = np.array([e_j0, s * s / (4.0 * (e_c - 2.0 * a))])
        wrt = ("e_j", "e_l")
        unpack = lambda th: (e_c, th[0], th[1])
    else:
        if e_l <= 0:
            raise DomainError("e_l must be positive")
        theta = np.array([s * s / (4.0 * e_l) + 2.0 * a, e_j0])
        wrt = ("e_c", "e_j")
        unpack = lambda th: (th[0], th[1], e_l)

    ms = np.array([1.0, 2.0, 3.0])
    target = np.array([mp.f01, 2.0 * mp.f02_half, 3.0 * mp.f03_third])

    def resid(th):
        return _forward_e0m(*unpack(th), ms) - target

    r = resid(theta)
    cost = float(r @ r)
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        jac = _jac_e0m(*unpack(theta), ms, wrt)
        jtj = jac.T @ jac
        if np.linalg.cond(jtj) > 1e14:
            raise ConvergenceError(
                "singular Jacobian in sweet-spot solve", residual=float(np.max(np.abs(r)))
            )
        step = np.linalg.solve(jtj, -jac.T @ r)
        if float(np.linalg.norm(jac.T @ r)) < tol or float(
            np.linalg.norm(step) / max(np.linalg.norm(theta), 1.0)
        ) < 1e-14:
            converged = True
            break
        lam = 1.0
        while lam > 1e-8:
            trial = theta + lam * step
            if np.all(trial > 0):
                rt = resid(trial)
                ct = float(rt @ rt)
                if ct <= cost:
                    theta, r, cost = trial, rt, ct
                    break
            lam *= 0.5
        else:
            converged = True  # no damped step improves: stationary point
            break
    if not converged:
        raise ConvergenceError(
            f"sweet-spot solve did not settle within {max_iter} iterations",
            residual=float(np.max(np.abs(r))),
        )
    e_c_f, e_j_f, e_l_f = unpack(theta)
    return SweetSpotSolution(
        e_c=float(e_c_f),
        e_j=float(e_j_f),
        e_l=float(e_l_f),
        residuals_ghz=tuple(float(v) for v in r),
        iterations=it,
        converged=converged,
    )


def damped_least_squares(residual, x0, jac="2-point", max_iter=2000):
    """Levenberg-Marquardt least squares with covariance-based standard errors.

    Returns (x, stderr, residual_rms, n_evaluations, converged). Shared by the
    flux-spectrum fit and the time-domain decay fits.
    """
    x0 = np.asarray(x0, float)
    res = least_squares(residual, x0, jac=jac, method="lm", max_nfev=max_iter)
    dof = max(len(res.fun) - len(x0), 1)
    cost2 = float(res.fun @ res.fun)
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * (cost2 / dof)
        stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        stderr = np.full(len(x0), math.nan)
    return res.x, stderr, math.sqrt(cost2 / len(res.fun)), int(res.nfev), bool(res.success)


# --- flux-spectrum fit -------------------------------------------------------

def _d_to_u(d):
    d = min(max(d, 1e-6), D_MAX * (1.0 - 1e-9))
    return math.log(d / (D_MAX - d))

def _u_to_d(u):
    return D_MAX / (1.0 + math.exp(-u))


def flux_model(
    bias_ma: np.ndarray,
    order: np.ndarray,
    e_c: float,
    e_j0: float,
    e_l: float,
    d: float,
    m_bias_ph: float,
    flux_offset: float,
):
    """Transition frequency (GHz) per point and its analytic Jacobian.

    Returns (f, jac_dict) where jac_dict maps parameter names in _FLUX_ALL
    to df/dparam arrays. The bias current maps to the modulation phase via
    phi = pi (M I / (2 Phi0) + offset).
    """
    i_a = np.asarray(bias_ma, float) * 1e-3
    m_h = m_bias_ph * 1e-12
    phi = math.pi * (m_h * i_a / (2.0 * PHI0) + flux_offset)
    c, s = np.cos(phi), np.sin(phi)
    g = np.sqrt(c * c + d * d * s * s)
    e_j = e_j0 * g

    den = 3.0 * e_j + e_l
    x = 0.75 * e_j * e_l / den
    a = 0.5 * e_c * e_l / den
    sq = 4.0 * np.sqrt(e_c * x)
    m = np.asarray(order, float)
    f = sq - a * (m + 1.0)  # E_0m / m

    # level-formula partials
    dsq_dx = 2.0 * np.sqrt(e_c / x)
    dx_dej = 0.75 * e_l**2 / den**2
    da_dej = -1.5 * e_c * e_l / den**2
    df_dej = dsq_dx * dx_dej - da_dej * (m + 1.0)
    dx_del = 2.25 * e_j**2 / den**2
    da_del = 1.5 * e_c * e_j / den**2
    df_del = dsq_dx * dx_del - da_del * (m + 1.0)
    df_dec = 2.0 * np.sqrt(x / e_c) - 0.5 * e_l / den * (m + 1.0)

    # flux-modulation partials
    dej_dej0 = g
    dej_dd = e_j0 * d * s * s / g
    dej_dphi = e_j0 * (d * d - 1.0) * s * c / g
    dphi_dm = math.pi * i_a * 1e-12 / (2.0 * PHI0)  # per pH
    dphi_doff = math.pi

    jac = {
        "e_j0": df_dej * dej_dej0,
        "d": df_dej * dej_dd,
        "m_bias": df_dej * dej_dphi * dphi_dm,
        "flux_offset": df_dej * dej_dphi * dphi_doff,
        "e_c": df_dec,
        "e_l": df_del,
    }
    return f, jac


def fit_flux_spectrum(
    data: SpectroscopyDataset,
    seed: CircuitParams,
    m_bias_ph_seed: float,
    free: tuple[str, ...] = _FLUX_FREE_DEFAULT,
    parameterization: str = "e_j0",
    max_iter: int = 400,
) -> FitResult:
    """Levenberg-Marquardt fit of the flux dispersion.

    free selects the floating parameters out of (e_j0, d, m_bias,
    flux_offset, e_c, e_l); the rest stay frozen at the seed. The junction
    asymmetry is fitted through a logistic transform so the solver remains
    unconstrained while d stays inside [0, 0.99]. parameterization="i_c"
    refits in total-critical-current coordinates (uA) instead of E_J0; the
    model curve is identical.
    """
    unknown = set(free) - set(_FLUX_ALL)
    if unknown:
        raise DomainError(f"unknown free parameters: {sorted(unknown)}")
    if not free:
        raise DomainError("at least one free parameter required")
    if parameterization not in ("e_j0", "i_c"):
        raise DomainError("parameterization must be 'e_j0' or 'i_c'")
    if not np.all(np.isfinite([seed.e_c, seed.e_j0, seed.e_l, seed.d,
                               m_bias_ph_seed, seed.flux_offset])):
        raise DomainError("seed parameters must be finite")

    values = {
        "e_j0": seed.e_j0,
        "d": seed.d,
        "m_bias": m_bias_ph_seed,
        "flux_offset": seed.flux_offset,
        "e_c": seed.e_c,
        "e_l": seed.e_l,
    }
    ej_scale = 1e-3 * josephson_energy_ghz(1e-6)  # GHz per uA of I_c; ~2.07e-3
    # internal solver coordinates: logistic for d, uA for i_c parameterization
    def to_internal(name, v):
        if name == "d":
            return _d_to_u(v)
        if name == "e_j0" and parameterization == "i_c":
            return v / (1e3 * ej_scale)
        return v

    def from_internal(name, u):
        if name == "d":
            return _u_to_d(u)
        if name == "e_j0" and parameterization == "i_c":
            return u * 1e3 * ej_scale
        return u

    def chain(name, u):
        """d(physical)/d(internal) at internal coordinate u."""
        if name == "d":
            dd = _u_to_d(u)
            return dd * (1.0 - dd / D_MAX)
        if name == "e_j0" and parameterization == "i_c":
            return 1e3 * ej_scale
        return 1.0

    x0 = np.array([to_internal(n, values[n]) for n in free])
    wsq = np.sqrt(data.weight)

    def split(x):
        cur = dict(values)
        for n, u in zip(free, x):
            cur[n] = from_internal(n, u)
        return cur

    def residual(x):
        cur = split(x)
        f, _ = flux_model(data.bias_ma, data.order, cur["e_c"], cur["e_j0"],
                          cur["e_l"], cur["d"], cur["m_bias"], cur["flux_offset"])
        return wsq * (f - data.freq_ghz)

    def jacobian(x):
        cur = split(x)
        _, jd = flux_model(data.bias_ma, data.order, cur["e_c"], cur["e_j0"],
                           cur["e_l"], cur["d"], cur["m_bias"], cur["flux_offset"])
        cols = [wsq * jd[n] * chain(n, u) for n, u in zip(free, x)]
        return np.column_stack(cols)

    res = least_squares(residual, x0, jac=jacobian, method="lm",
                        max_nfev=max_iter, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    fitted = split(res.x)
    n_pts, n_par = len(data), len(free)
    dof = max(n_pts - n_par, 1)
    cost2 = float(res.fun @ res.fun)
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * (cost2 / dof)
        sig_internal = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        sig_internal = np.full(n_par, math.nan)
    stderr = {
        n: float(sig_internal[k] * abs(chain(n, res.x[k]))) for k, n in enumerate(free)
    }
    at_bound = "d" in free and fitted["d"] > 0.985 * D_MAX
    if not res.success:
        raise ConvergenceError(
            f"flux-spectrum fit did not converge: {res.message}",
            residual=math.sqrt(cost2 / n_pts),
        )
    params = replace(
        seed,
        e_c=fitted["e_c"],
        e_j0=fitted["e_j0"],
        e_l=fitted["e_l"],
        d=fitted["d"],
        flux_offset=fitted["flux_offset"],
    )
    return FitResult(
        params=params,
        m_bias_ph=fitted["m_bias"],
        residual_rms=math.sqrt(cost2 / n_pts),
        stderr=stderr,
        iterations=int(res.nfev),
        converged=bool(res.success),
        free=tuple(free),
        seed={n: values[n] for n in free},
        at_bound=at_bound,
    )


def joint_fit(
    mp: MultiphotonSet,
    data: SpectroscopyDataset,
    seed: CircuitParams,
    m_bias_ph_seed: float,
    rounds: int = 10,
    rel_tol: float = 1e-3,
):
    """Alternate the sweet-spot solve and the flux fit until both settle.

    Each round feeds the flux fit's E_L into the sweet-spot solve and the
    solve's E_C back into the flux fit (E_C frozen there); stops when no
    parameter moves by more than rel_tol, or after `rounds` rounds.
    """
    params = seed
    m_ph = m_bias_ph_seed
    fit = None
    sol = None
    for _ in range(rounds):
        sol = solve_sweet_spot(mp, e_c_seed=params.e_c, e_l=params.e_l)
        params = replace(params, e_c=sol.e_c, e_j0=sol.e_j)
        fit = fit_flux_spectrum(
            data, params, m_ph, free=("e_j0", "d", "m_bias", "flux_offset", "e_l")
        )
        prev = (params.e_j0, params.e_l, m_ph)
        params, m_ph = fit.params, fit.m_bias_ph
        moves = [abs(a - b) / max(abs(b), 1e-12) for a, b in
                 zip((params.e_j0, params.e_l, m_ph), prev)]
        if max(moves) < rel_tol:
            break
    return sol, fit


# --- CSV ingest --------------------------------------------------------------

_CSV_COLUMNS = ("bias_mA", "freq_GHz", "weight", "m")


def ingest_csv(path) -> SpectroscopyDataset:
    """Read a spectroscopy CSV with header bias_mA, freq_GHz[, weight][, m].

    Rows with non-finite entries are rejected; the error names the offending
    line numbers.
    """
    rows = []
    bad = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:2] != ["bias_mA", "freq_GHz"] or any(
            h not in _CSV_COLUMNS for h in header
        ):
            raise DataFormatError(
                f"{path}: header must start with bias_mA,freq_GHz "
                f"(optional columns: weight, m); got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                bad.append(lineno)
                continue
            try:
                vals = {h: float(c) for h, c in zip(header, row)}
            except ValueError:
                bad.append(lineno)
                continue
            if not all(math.isfinite(v) for v in vals.values()):
                bad.append(lineno)
                continue
            rows.append(vals)
    if bad:
        raise DataFormatError(f"{path}: malformed or non-finite rows at lines {bad}")
    if not rows:
        raise DomainError(f"{path}: no data rows")
    return SpectroscopyDataset(
        bias_ma=np.array([r["bias_mA"] for r in rows]),
        freq_ghz=np.array([r["freq_GHz"] for r in rows]),
        weight=np.array([r.get("weight", 1.0) for r in rows]),
        order=np.array([int(r.get("m", 1)) for r in rows]),
    )


def write_csv(path, data: SpectroscopyDataset):
    """Write a dataset in the ingest format; floats keep 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for b, f, w, m in zip(data.bias_ma, data.freq_ghz, data.weight, data.order):
            writer.writerow([f"{b:.17g}", f"{f:.17g}", f"{w:.17g}", int(m)])
