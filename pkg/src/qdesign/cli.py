"""Command-line front end.

Subcommands wrap the library modules and emit three views of the same data:
an aligned text table on stdout, a JSON report (the machine contract), and
CSV tables plus rendered figures in the output directory.

Exit codes: 0 success, 2 configuration or usage error, 3 numeric
non-convergence, 4 I/O or data-format error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import report as rep
from .circuit import CircuitParams, diagonalize, ej_at_phase, frequency_vs_bias, transmon_levels
from .config import ToolkitConfig, default_config_path, load_config
from .constants import PHI0, TWO_PI
from .dynamics import (
    QubitNoiseParams,
    ZControlCalibration,
    evolve,
    extract_decay,
    fringe_frequency_hz,
    ramsey_experiment,
    read_sequence,
    simulate_z_precession,
    t1_experiment,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DataFormatError,
    DomainError,
    GeometryError,
    NoDecayError,
    QdesignError,
)
from .loss import budget, effective_loss_tangent, loss_tangent_rate
from .magnetics import (
    CouplingEstimate,
    GradiometricLoop,
    flux_per_current,
    gradiometric_mutual,
    neumann_mutual,
    read_geometry,
    z_coupling,
)
from .spectrofit import (
    MultiphotonSet,
    fit_flux_spectrum,
    ingest_csv,
    joint_fit,
    solve_sweet_spot,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _load_neighbor_geometry(cfg: ToolkitConfig, separation_um, rotation_rad):
    """Reference qubit loops plus a neighbor displaced along +y and rotated."""
    geo = read_geometry(cfg.geometry_path())
    for name in ("squid_upper", "squid_lower", "ring", "bias_line"):
        if name not in geo:
            raise ConfigError(f"geometry file lacks required polyline {name!r}")
    ring = geo["ring"][0]
    grad = GradiometricLoop(geo["squid_upper"][0], geo["squid_lower"][0])
    r_edge = float(np.max(np.linalg.norm(ring.vertices[:, :2], axis=1)))
    # filament edge-to-edge separation convention
    d = 2.0 * r_edge + separation_um
    ring_b = ring.rotated_z(rotation_rad).translated((0.0, d, 0.0))
    grad_b = GradiometricLoop(
        grad.loop1.rotated_z(rotation_rad).translated((0.0, d, 0.0)),
        grad.loop2.rotated_z(rotation_rad).translated((0.0, d, 0.0)),
    )
    return geo, ring, grad, ring_b, grad_b, d


def cmd_levels(cfg: ToolkitConfig, args, out):
    params = cfg.circuit_params()
    if args.bias is not None:
        flux = cfg.raw["purcell"]["m_bias"] * args.bias * 1e-3 / (2.0 * PHI0) + params.flux_offset
    else:
        flux = args.flux if args.flux is not None else params.flux_offset
    e_j = ej_at_phase(params, flux)
    m_max = args.levels
    methods = {}
    want_pert = args.perturbative or not args.numeric
    want_num = args.numeric or not args.perturbative
    if want_pert:
        methods["perturbative"] = transmon_levels(params, e_j, m_max=m_max)
    if want_num:
        methods["numeric"] = diagonalize(params, e_j, m_max=max(m_max, 2))

    payload = {
        "flux_phi0": flux,
        "e_j_ghz": e_j,
        "levels_ghz": {k: list(v.energies[:m_max]) for k, v in methods.items()},
        "anharmonicity_ghz": {k: v.anharmonicity_abs for k, v in methods.items()},
        "anharmonicity_rel": {k: v.anharmonicity_rel for k, v in methods.items()},
    }
    rows = []
    for m in range(1, m_max + 1):
        row = [f"E_0{m} (GHz)"]
        for k in methods:
            row.append(f"{methods[k].energies[m - 1]:.6f}")
        rows.append(tuple(row))
    rows.append(tuple(["anharmonicity (GHz)"] + [f"{methods[k].anharmonicity_abs:.6f}" for k in methods]))
    rows.append(tuple(["relative anharmonicity"] + [f"{methods[k].anharmonicity_rel * 100:.2f}%" for k in methods]))
    print(f"levels at flux = {flux:g} Phi0 (E_J = {e_j:.4f} GHz)")
    print(rep.format_table(rows, headers=tuple(["quantity"] + list(methods))))

    if out:
        m_bias = cfg.raw["purcell"]["m_bias"]
        period_ma = 2.0 * PHI0 / m_bias * 1e3
        bias = np.linspace(-0.55 * period_ma, 0.55 * period_ma, 221)
        freq = np.array([frequency_vs_bias(params, m_bias, b * 1e-3) for b in bias])
        rep.write_json(f"{out}/levels.json", payload)
        rep.write_csv(f"{out}/levels_dispersion.csv", ["bias_mA", "f01_GHz"], [bias, freq])
        if not args.no_plot:
            mark = None
            if args.bias is not None:
                mark = (args.bias, frequency_vs_bias(params, m_bias, args.bias * 1e-3))
            rep.plot_dispersion(f"{out}/levels_dispersion.png", bias, freq, marker=mark)
    return EXIT_OK


_CHANNEL_ORDER = ("purcell_single_mode", "purcell_inductive", "purcell_capacitive",
                  "purcell_total", "tlf", "radiative", "total")
_CHANNEL_LABEL = {
    "purcell_single_mode": "Purcell single-mode",
    "purcell_inductive": "Purcell inductive",
    "purcell_capacitive": "Purcell capacitive",
    "purcell_total": "Purcell total",
    "tlf": "defect bath (TLF)",
    "radiative": "radiation",
    "total": "reciprocal sum",
}
_CHANNEL_FLAG = {"sm": "purcell_single_mode", "ind": "purcell_inductive",
                 "cap": "purcell_capacitive", "tlf": "tlf", "rad": "radiative"}


def cmd_loss(cfg: ToolkitConfig, args, out):
    params = cfg.circuit_params()
    if args.sweet_spot:
        f_q = transmon_levels(params, params.e_j0, m_max=1).e01 * 1e9
        pin = cfg.purcell_inputs(f_q_hz=f_q)
    else:
        pin = cfg.purcell_inputs()
    b = budget(pin, cfg.tlf_model(), radiative_rate=cfg.radiative_rate())
    times = b.lifetimes_us()

    lt = cfg.raw["loss_tangent"]
    delta_eff = effective_loss_tangent(lt["oxide_fill"], lt["oxide_delta"])
    oxide_us = 1e6 / loss_tangent_rate(delta_eff, pin.omega_q)

    if args.channel != "all":
        key = _CHANNEL_FLAG[args.channel]
        times = {key: times[key], "total": times[key]}

    payload = {
        "f_q_ghz": pin.omega_q / TWO_PI / 1e9,
        "detuning_ghz": pin.detuning / TWO_PI / 1e9,
        "lifetimes_us": {k: times[k] for k in times},
        "lifetimes_us_2sig": {k: rep.round_sig(v) for k, v in times.items()},
        "rates_per_s": {
            "purcell_single_mode": b.purcell_single_mode,
            "purcell_inductive": b.purcell_inductive,
            "purcell_capacitive": b.purcell_capacitive,
            "tlf": b.tlf,
            "radiative": b.radiative,
            "total": b.gamma_sigma,
        },
        "loss_tangent": {"delta_eff": delta_eff, "lifetime_us": oxide_us},
    }
    order = [k for k in _CHANNEL_ORDER if k in times]
    rows = [(_CHANNEL_LABEL[k], f"{rep.round_sig(times[k]):g}", f"{times[k]:.2f}") for k in order]
    print(f"relaxation budget at f_q = {payload['f_q_ghz']:.3f} GHz "
          f"(detuning {payload['detuning_ghz']:.2f} GHz)")
    print(rep.format_table(rows, headers=("channel", "T1 limit (us)", "exact (us)")))
    print(f"participation-ratio cross-check: delta_eff = {delta_eff:.2e} "
          f"-> {oxide_us:.1f} us")

    if out:
        rep.write_json(f"{out}/loss.json", payload)
        rep.write_csv(
            f"{out}/loss.csv",
            ["channel", "lifetime_us"],
            [np.array(order, dtype=object), np.array([times[k] for k in order])],
        )
        if not args.no_plot:
            rep.plot_budget(f"{out}/loss.png", [_CHANNEL_LABEL[k] for k in order],
                            [times[k] for k in order])
    return EXIT_OK


def cmd_coupling(cfg: ToolkitConfig, args, out):
    g = cfg.raw["geometry"]
    sep = args.separation if args.separation is not None else g["qubit_separation"]
    rot = args.rotation
    min_sep = g["min_separation"]
    geo, ring, grad, ring_b, grad_b, d = _load_neighbor_geometry(cfg, sep, rot)
    m_loop = neumann_mutual(ring, ring_b, min_sep=min_sep)
    m_squid = gradiometric_mutual(grad_b, ring, min_sep=min_sep)
    m_bias_net = gradiometric_mutual(grad, geo["bias_line"][0], min_sep=min_sep)
    i_phi0 = flux_per_current(abs(m_bias_net) * 1e-12)
    est = CouplingEstimate(m_ij=abs(m_loop), l_total=g["l_total"], beta=g["beta"],
                           g_ref=g["g_ref"])
    gz = z_coupling(est)
    payload = {
        "separation_um": sep,
        "rotation_rad": rot,
        "center_distance_um": d,
        "m_loop_ph": m_loop,
        "m_squid_ph": m_squid,
        "m_bias_ph": m_bias_net,
        "bias_current_per_phi0_ma": i_phi0 * 1e3,
        "g_z_mhz": gz / 1e6,
    }
    rows = [
        ("qubit-qubit loop mutual |M_ij|", f"{abs(m_loop):.2f} pH"),
        ("SQUID flux-transfer mutual", f"{m_squid:.3f} pH"),
        ("bias-line net mutual", f"{m_bias_net:.3f} pH"),
        ("bias current per Phi0", f"{i_phi0 * 1e3:.3f} mA"),
        ("inductive Z coupling g_z/2pi", f"{gz / 1e6:.2f} MHz"),
    ]
    print(f"coupling report at separation {sep:g} um, rotation {rot:g} rad")
    print(rep.format_table(rows))

    if out:
        # rotation sweep on decimated loops; illustrative, not the report value
        from .magnetics import Polyline

        def thin(poly):
            return Polyline(poly.vertices[::3], closed=True, name=poly.name)

        ring_thin = thin(ring)
        rots = np.linspace(0.0, math.pi, 13)
        curve = []
        for r in rots:
            gb_r = GradiometricLoop(
                thin(grad.loop1).rotated_z(float(r)).translated((0.0, d, 0.0)),
                thin(grad.loop2).rotated_z(float(r)).translated((0.0, d, 0.0)),
            )
            curve.append(gradiometric_mutual(gb_r, ring_thin, min_sep=min_sep))
        curve = np.array(curve)
        rep.write_json(f"{out}/coupling.json", payload)
        rep.write_csv(f"{out}/coupling_rotation.csv", ["rotation_rad", "m_squid_pH"],
                      [rots, curve])
        if not args.no_plot:
            rep.plot_coupling(f"{out}/coupling_rotation.png", rots, curve,
                              marker=(rot, m_squid))
    return EXIT_OK


def cmd_fit(cfg: ToolkitConfig, args, out):
    params = cfg.circuit_params()
    m_bias_ph = cfg.raw["purcell"]["m_bias"] * 1e12

    def triple():
        if args.f01 is None or args.f02_half is None or args.f03_third is None:
            raise ConfigError("sweetspot/joint modes need --f01, --f02-half and --f03-third (GHz)")
        return MultiphotonSet(args.f01, args.f02_half, args.f03_third)

    payload: dict = {"mode": args.mode}
    if args.mode == "sweetspot":
        sol = solve_sweet_spot(triple(), e_c_seed=params.e_c)
        payload["sweet_spot"] = {
            "e_c_ghz": sol.e_c, "e_j_ghz": sol.e_j, "e_l_ghz": sol.e_l,
            "residuals_ghz": list(sol.residuals_ghz),
            "iterations": sol.iterations, "converged": sol.converged,
        }
        rows = [("E_C", f"{sol.e_c:.4f} GHz"), ("E_J", f"{sol.e_j:.2f} GHz"),
                ("E_L", f"{sol.e_l:.2f} GHz"),
                ("max residual", f"{max(abs(r) for r in sol.residuals_ghz) * 1e6:.2f} kHz")]
        print("sweet-spot solve")
        print(rep.format_table(rows))
        fit = None
    else:
        if not args.data:
            raise ConfigError(f"mode {args.mode!r} needs a spectroscopy CSV")
        data = ingest_csv(args.data)
        if args.mode == "flux":
            fit = fit_flux_spectrum(data, params, m_bias_ph)
        else:
            _, fit = joint_fit(triple(), data, params, m_bias_ph)
        payload["flux_fit"] = {
            "e_c_ghz": fit.params.e_c, "e_j0_ghz": fit.params.e_j0,
            "e_l_ghz": fit.params.e_l, "d": fit.params.d,
            "m_bias_ph": fit.m_bias_ph, "flux_offset_phi0": fit.params.flux_offset,
            "residual_rms_ghz": fit.residual_rms,
            "stderr": fit.stderr, "iterations": fit.iterations,
            "converged": fit.converged, "free": list(fit.free), "seed": fit.seed,
            "at_bound": fit.at_bound,
        }
        rows = [("E_J0", f"{fit.params.e_j0:.3f} GHz"),
                ("d", f"{fit.params.d:.4f}"),
                ("M_bias", f"{fit.m_bias_ph:.4f} pH"),
                ("flux offset", f"{fit.params.flux_offset:.5f} Phi0"),
                ("residual rms", f"{fit.residual_rms * 1e3:.4f} MHz")]
        print(f"flux-spectrum fit ({len(data)} points)")
        print(rep.format_table(rows))

    if out:
        rep.write_json(f"{out}/fit.json", payload)
        if args.mode != "sweetspot" and fit is not None:
            from .spectrofit import flux_model

            grid = np.linspace(float(np.min(data.bias_ma)), float(np.max(data.bias_ma)), 241)
            model, _ = flux_model(grid, np.ones_like(grid), fit.params.e_c,
                                  fit.params.e_j0, fit.params.e_l, fit.params.d,
                                  fit.m_bias_ph, fit.params.flux_offset)
            rep.write_csv(f"{out}/fit_model.csv", ["bias_mA", "f01_GHz"], [grid, model])
            if not args.no_plot:
                rep.plot_fit(f"{out}/fit.png", data.bias_ma, data.freq_ghz, grid, model)
    return EXIT_OK


def cmd_simulate(cfg: ToolkitConfig, args, out):
    noise = cfg.noise_params()
    cal = cfg.z_calibration()
    pi_ns = cfg.pi_pulse_ns
    shots, seed = args.shots, args.seed
    summary: dict = {"shots": shots, "seed": seed}

    if args.sequence:
        seq = read_sequence(args.sequence)
        t_ns, z = evolve(seq, noise, cal, shots=shots, seed=seed)
        label, xlabel = "sequence", "time (ns)"
        summary["sequence_file"] = args.sequence
        fit_info = None
    elif args.preset == "t1":
        t_ns, z = t1_experiment(noise, cal, np.linspace(0.0, 4e3 * noise.t1_us, 101),
                                shots=shots, seed=seed, pi_ns=pi_ns)
        fit_info = extract_decay(t_ns / 1e3, z, model="exponential")
        summary["t1_fit_us"] = fit_info["tau_us"]
        summary["t1_fit_stderr_us"] = fit_info["tau_stderr_us"]
        label, xlabel = "t1", "delay (ns)"
    elif args.preset == "ramsey":
        t_ns, z = ramsey_experiment(noise, cal, np.linspace(0.0, 8000.0, 161),
                                    echo=False, shots=shots, seed=seed, pi_ns=pi_ns)
        fit_info = extract_decay(t_ns / 1e3, z, model="exponential")
        summary["t2_star_fit_us"] = fit_info["tau_us"]
        label, xlabel = "ramsey", "delay (ns)"
    elif args.preset == "echo":
        t_ns, z = ramsey_experiment(noise, cal, np.linspace(0.0, 3e3 * noise.t2_us, 101),
                                    echo=True, shots=shots, seed=seed, pi_ns=pi_ns)
        fit_info = extract_decay(t_ns / 1e3, z, model="exponential")
        summary["t2_fit_us"] = fit_info["tau_us"]
        label, xlabel = "echo", "delay (ns)"
    else:  # zpulse
        t_ns, z = simulate_z_precession(args.eta, np.arange(0.0, 256.0), cal, noise,
                                        shots=shots, seed=seed, pi_ns=pi_ns)
        f_peak, f_bin = fringe_frequency_hz(t_ns, z)
        summary["eta_ua"] = args.eta
        summary["fringe_mhz"] = f_peak / 1e6
        summary["fringe_bin_mhz"] = f_bin / 1e6
        summary["expected_shift_mhz"] = cal.shift_hz(args.eta) / 1e6
        fit_info = None
        label, xlabel = "zpulse", "Z-pulse length (ns)"

    if fit_info:
        summary["fit"] = fit_info
    print(f"simulate {label}: " + ", ".join(
        f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
        for k, v in summary.items() if not isinstance(v, dict)))

    if out:
        rep.write_csv(f"{out}/simulate_{label}.csv", ["time_ns", "sigma_z"], [t_ns, z])
        rep.write_json(f"{out}/simulate_{label}.json", summary)
        if not args.no_plot:
            fit_y = None
            if fit_info and fit_info["model"] == "exponential":
                fit_y = (fit_info["amplitude"] * np.exp(-(t_ns / 1e3) / fit_info["tau_us"])
                         + fit_info["offset"])
            rep.plot_trace(f"{out}/simulate_{label}.png", t_ns, z,
                           fit_t=None if fit_y is None else t_ns, fit_y=fit_y,
                           xlabel=xlabel)
    return EXIT_OK


def cmd_reproduce(cfg: ToolkitConfig, args, out):
    from .acceptance import run_acceptance_matrix

    results = run_acceptance_matrix(cfg, shots=args.shots, seed=args.seed)
    rows = [(r.name, "PASS" if r.passed else "FAIL", r.detail) for r in results]
    print(rep.format_table(rows, headers=("check", "status", "detail")))
    n_fail = sum(1 for r in results if not r.passed)
    print(f"\n{len(results) - n_fail}/{len(results)} checks passed")
    if out:
        rep.write_json(f"{out}/reproduce.json", {
            "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                       for r in results],
            "passed": n_fail == 0,
        })
    return EXIT_OK if n_fail == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qdesign",
        description="design and analysis toolkit for flux-tunable concentric transmons",
    )
    p.add_argument("--config", default=None, help="config file (default: shipped reference)")
    p.add_argument("--out", default=None, help="output directory (default from config)")
    p.add_argument("--no-out", action="store_true", help="suppress file output entirely")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("levels", help="energy levels and anharmonicity")
    sp.add_argument("--flux", type=float, default=None, help="total modulation flux (Phi0)")
    sp.add_argument("--bias", type=float, default=None, help="bias current (mA)")
    sp.add_argument("--numeric", action="store_true")
    sp.add_argument("--perturbative", action="store_true")
    sp.add_argument("--levels", type=int, default=3, help="number of levels")

    sp = sub.add_parser("loss", help="relaxation budget")
    sp.add_argument("--channel", choices=["all", "sm", "ind", "cap", "tlf", "rad"],
                    default="all")
    sp.add_argument("--sweet-spot", action="store_true",
                    help="recompute at the zero-flux qubit frequency")

    sp = sub.add_parser("coupling", help="mutual inductances and Z coupling")
    sp.add_argument("--separation", type=float, default=None, help="edge separation (um)")
    sp.add_argument("--rotation", type=float, default=0.0,
                    help="neighbor junction-axis rotation (rad)")

    sp = sub.add_parser("fit", help="extract circuit parameters from data")
    sp.add_argument("data", nargs="?", default=None, help="spectroscopy CSV")
    sp.add_argument("--mode", choices=["sweetspot", "flux", "joint"], required=True)
    sp.add_argument("--f01", type=float, default=None, help="f01 (GHz)")
    sp.add_argument("--f02-half", dest="f02_half", type=float, default=None)
    sp.add_argument("--f03-third", dest="f03_third", type=float, default=None)

    sp = sub.add_parser("simulate", help="time-domain pulse experiments")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--preset", choices=["t1", "ramsey", "echo", "zpulse"])
    g.add_argument("--sequence", default=None, help="pulse sequence file")
    sp.add_argument("--shots", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--eta", type=float, default=32.0, help="Z-pulse amplitude (uA)")

    sp = sub.add_parser("reproduce-paper",
                        help="run the built-in reference checks and print a matrix")
    sp.add_argument("--shots", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=1)
    return p


_COMMANDS = {
    "levels": cmd_levels,
    "loss": cmd_loss,
    "coupling": cmd_coupling,
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "reproduce-paper": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config or default_config_path())
        out = None
        if not args.no_out:
            out = rep.ensure_dir(args.out or cfg.output_dir)
        return _COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, NoDecayError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, GeometryError, QdesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
