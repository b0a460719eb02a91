"""Command-line entry point: ``cavity-kit <subcommand> --config FILE --out FILE``.

Every run writes its outputs plus ``<out>.manifest.json`` (command, argv,
config hash, seed, tool version, timestamps).  Exit codes: 0 success,
1 domain error (e.g. NoThreshold), 2 usage or configuration error.

Output schemas (frequencies as nu = omega / 2 pi):

  modes           l,m,n,delta_mu_over_2pi_MHz,weight_re,weight_im
  greens-map      x_um,y_um,re_D,im_D,method,rel_err_est
  coop-curve      detuning_MHz,ratio_quadrature,ratio_closed_form,c_mm
  threshold-scan  delta_c_MHz|position_um,omega_c_over_2pi_MHz,omega_c_norm_over_2pi_MHz,
                  enhancement,status
  fit             JSON fit result (plus the dataset CSV with --synthetic)
  bootstrap       JSON summary; --ensemble CSV epsilon_over_2pi_MHz,alpha,delta_0_over_2pi_MHz
  deconvolve      JSON {hwhm_total_um, hwhm_lorentz_um, peak_shift_um, ...}
  image           x_um,y_um,intensity (optional 16-bit PGM via --pgm)
  dynamics        t_us,psi_f_sq,psi_b_sq,flux_proxy,omega_t_over_2pi_MHz

Dataset CSV for fit/bootstrap: kind,x_value_MHz_or_um,omega_c_sq_MHz2,n_atoms,
sigma_x_um,sigma_y_um,delta_c_MHz,amplitude_index[,e_dw_over_2pi_MHz,weight].
Profile CSV for deconvolve: x_um,value.

Ranges are start:stop:step with the step taken as a magnitude, so
``--detunings -80:-320:20`` runs from -80 down to -320 MHz inclusive.
The environment variable CAVITY_KIT_THREADS caps the bootstrap worker count.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .cavity_model import mhz, shell_weights, to_mhz
from .config import ConfigError, RunConfig, load_config
from .cooperativity import enhancement_cloud, enhancement_point
from .errors import CavityKitError
from .greens import greens_map
from .plotting import svg_lines, write_pgm16


class UsageError(Exception):
    pass


def _range(text):
    """'start:stop:step' inclusive of stop, or a comma list.

    The step is a magnitude; the direction follows start -> stop, so
    ``-80:-320:20`` and ``-80:-320:-20`` are the same range.
    """
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step == 0:
                raise ValueError
            step = abs(step) if b >= a else -abs(step)
            n = int(np.floor((b - a) / step + 1e-9)) + 1
            return a + step * np.arange(n)
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:stop:step or a,b,c")


def _pair(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}")
    return a, b


def _fmt(v):
    if isinstance(v, (str, int, np.integer)):
        return str(v)
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _threads():
    try:
        return max(1, int(os.environ.get("CAVITY_KIT_THREADS", "1")))
    except ValueError:
        return 1


# subcommands ------------------------------------------------------------------

def cmd_modes(args, cfg: RunConfig):
    cav = cfg.cavity
    w = shell_weights(args.n_max, cav)
    rows = []
    for n in range(args.n_max + 1):
        if w[n] == 0:
            continue
        for l in range(n + 1):
            rows.append((l, n - l, n, to_mhz(cav.detuning - cav.epsilon * n), w[n].real, w[n].imag))
    _write_csv(args.out, ["l", "m", "n", "delta_mu_over_2pi_MHz", "weight_re", "weight_im"], rows)
    return [args.out]


def cmd_greens_map(args, cfg):
    xs = np.linspace(-args.extent / 2, args.extent / 2, args.n)
    d, err = greens_map(xs, xs, args.source, cfg.cavity, return_error=True)
    method = "single_mode" if cfg.cavity.single_mode else "quadrature"
    rows = [(x, y, d[i, j].real, d[i, j].imag, method, err[i, j])
            for i, x in enumerate(xs) for j, y in enumerate(xs)]
    _write_csv(args.out, ["x_um", "y_um", "re_D", "im_D", "method", "rel_err_est"], rows)
    outs = [args.out]
    if args.pgm:
        write_pgm16(args.pgm, np.abs(d).T)
        outs.append(args.pgm)
    return outs


def cmd_coop_curve(args, cfg):
    rows = []
    for nu in args.detunings:
        cav = replace(cfg.cavity, delta_c=mhz(nu))
        res = enhancement_point(cav) if args.point else enhancement_cloud(cav, cfg.cloud)
        rows.append((nu, res.ratio_quadrature, res.ratio_closed_form, res.c_mm))
    _write_csv(args.out, ["detuning_MHz", "ratio_quadrature", "ratio_closed_form", "c_mm"], rows)
    outs = [args.out]
    if args.svg:
        arr = np.array(rows, float)
        svg_lines(args.svg, -arr[:, 0], {"quadrature": arr[:, 1], "closed form": arr[:, 2]},
                  "-Delta_C / 2pi (MHz)", "C_mm / C")
        outs.append(args.svg)
    return outs


def cmd_threshold_scan(args, cfg):
    from .threshold import scan_detuning, scan_position

    first = not args.first_order
    if args.mode == "detuning":
        xs = args.detunings if args.detunings is not None else _range("-40:-320:20")
        rows = scan_detuning(cfg.cloud, cfg.cavity, cfg.pump, mhz(xs), include_dispersive=first)
        head = "delta_c_MHz"
    else:
        xs = args.positions if args.positions is not None else _range("-12:12:1")
        rows = scan_position(cfg.cloud, cfg.cavity, cfg.pump, xs, include_dispersive=first)
        head = "position_um"
    out = [(x, to_mhz(r.omega_c), to_mhz(r.omega_c_norm), r.enhancement, r.status)
           for x, r in zip(xs, rows)]
    _write_csv(args.out, [head, "omega_c_over_2pi_MHz", "omega_c_norm_over_2pi_MHz",
                          "enhancement", "status"], out)
    outs = [args.out]
    if args.svg:
        svg_lines(args.svg, xs, {"Omega_c": [o[1] for o in out]}, head, "Omega_c / 2pi (MHz)")
        outs.append(args.svg)
    if all(r.status != "ok" for r in rows):
        raise _AllFailed(rows[0].status, outs)
    return outs


class _AllFailed(CavityKitError):
    def __init__(self, msg, outputs):
        super().__init__(f"no row produced a threshold ({msg})")
        self.outputs = outputs


def _fit_inputs(args, cfg):
    from .fitting import (
        FitParams,
        NoiseModel,
        paper_design,
        read_datasets_csv,
        synthesize_dataset,
        write_datasets_csv,
    )

    fit_cfg = cfg.extra.get("fit", {})
    outs = []
    if args.synthetic:
        design = paper_design()
        n_sets = len(design.detuning_scans) + len(design.position_scans)
        amps = tuple(np.linspace(1.3, 2.0, n_sets))
        truth = FitParams(mhz(float(fit_cfg.get("true_epsilon_over_2pi_MHz", 2.6))),
                          float(fit_cfg.get("true_alpha", 3e-4)),
                          mhz(float(fit_cfg.get("true_delta_0_over_2pi_MHz", 0.8))), amps)
        datasets = synthesize_dataset(truth, design, NoiseModel(float(fit_cfg.get("noise", 0.03))),
                                      cfg.seed, cfg.cavity, cfg.pump.delta_a)
        if args.data_out:
            write_datasets_csv(args.data_out, datasets)
            outs.append(args.data_out)
    elif args.data:
        datasets = read_datasets_csv(args.data, cfg.cavity, cfg.pump.delta_a)
    else:
        raise UsageError("give --data FILE or --synthetic")
    n_amp = len(datasets)
    init = FitParams(mhz(float(fit_cfg.get("init_epsilon_over_2pi_MHz", 2.0))),
                     float(fit_cfg.get("init_alpha", 1e-3)),
                     mhz(float(fit_cfg.get("init_delta_0_over_2pi_MHz", 0.0))),
                     tuple([float(fit_cfg.get("init_amplitude", 1.5))] * n_amp))
    return datasets, init, outs


def _fit_summary(res):
    d = res.to_dict()
    p, u = d["parameters"], d["uncertainties"]
    d["summary"] = {
        "epsilon_over_2pi_MHz": to_mhz(p["epsilon"]),
        "epsilon_err_over_2pi_MHz": to_mhz(u["epsilon"]),
        "alpha": p["alpha"],
        "alpha_err": u["alpha"],
        "delta_0_over_2pi_MHz": to_mhz(p["delta_0"]),
        "delta_0_err_over_2pi_MHz": to_mhz(u["delta_0"]),
    }
    return d


def cmd_fit(args, cfg):
    from .fitting import FitOptions, fit_global

    datasets, init, outs = _fit_inputs(args, cfg)
    opts = FitOptions(jacobian=args.jacobian)
    res = fit_global(datasets, init, opts)
    out = _fit_summary(res)
    out["seed"] = cfg.seed
    _write_json(args.out, out)
    return outs + [args.out]


def cmd_bootstrap(args, cfg):
    from .fitting import ThresholdModel, bootstrap, fit_global

    datasets, init, outs = _fit_inputs(args, cfg)
    seed = cfg.seed if args.seed is None else args.seed
    model = ThresholdModel(datasets)
    base = fit_global(datasets, init, model=model)
    ens = bootstrap(datasets, args.n_resamples, seed, model=model, base_fit=base,
                    workers=_threads())
    stack = np.array([f.params.vector()[:3] for f in ens.fits])
    summary = {
        "seed": seed,
        "n_resamples": args.n_resamples,
        "n_failed": ens.n_failed,
        "point_fit": _fit_summary(base)["summary"],
        "mean": dict(zip(["epsilon_over_2pi_MHz", "alpha", "delta_0_over_2pi_MHz"],
                         [to_mhz(stack[:, 0].mean()), stack[:, 1].mean(),
                          to_mhz(stack[:, 2].mean())])),
        "median": dict(zip(["epsilon_over_2pi_MHz", "alpha", "delta_0_over_2pi_MHz"],
                           [to_mhz(np.median(stack[:, 0])), float(np.median(stack[:, 1])),
                            to_mhz(np.median(stack[:, 2]))])),
        "std": dict(zip(["epsilon_over_2pi_MHz", "alpha", "delta_0_over_2pi_MHz"],
                        [to_mhz(stack[:, 0].std(ddof=1)), stack[:, 1].std(ddof=1),
                         to_mhz(stack[:, 2].std(ddof=1))])),
        "covariance_full": ens.covariance.tolist(),
    }
    _write_json(args.out, summary)
    outs.append(args.out)
    if args.ensemble:
        _write_csv(args.ensemble, ["epsilon_over_2pi_MHz", "alpha", "delta_0_over_2pi_MHz"],
                   [(to_mhz(r[0]), r[1], to_mhz(r[2])) for r in stack])
        outs.append(args.ensemble)
    return outs


def cmd_deconvolve(args, cfg):
    from .fitting import PositionProfile, peak_offset_correction, profile_from_scan, \
        voigt_deconvolve
    from .threshold import scan_position

    if args.data:
        with open(args.data, newline="") as fh:
            rec = list(csv.DictReader(fh))
        try:
            prof = PositionProfile([float(r["x_um"]) for r in rec], [float(r["value"]) for r in rec])
        except KeyError as exc:
            raise UsageError(f"profile CSV needs columns x_um,value ({exc})")
        except ValueError as exc:
            raise UsageError(f"profile CSV holds a non-numeric value ({exc})")
    else:
        positions = args.positions if args.positions is not None else np.linspace(-12, 12, 49)
        rows = scan_position(cfg.cloud, cfg.cavity, cfg.pump, positions)
        prof = profile_from_scan(rows)
    corrected = peak_offset_correction(prof)
    v = voigt_deconvolve(corrected, cfg.cloud)
    _write_json(args.out, {
        "hwhm_total_um": v.hwhm_total,
        "hwhm_lorentz_um": v.hwhm_lorentz,
        "gamma_scan_um": v.gamma_scan,
        "gamma_err_um": v.gamma_err,
        "gaussian_sigma_scan_um": v.sigma_scan,
        "peak_shift_um": corrected.shift,
    })
    return [args.out]


def cmd_image(args, cfg):
    from .imaging import OpticsChain, extract_gaussian_width, gaussian_pump, steady_state_field, \
        transmission_image

    im = cfg.extra.get("image", {})
    pump = gaussian_pump(tuple(im.get("pump_center_um", (0.0, 0.0))),
                         float(im.get("pump_waist_um", 1.7)),
                         float(im.get("extent_um", 4 * cfg.cavity.w0)), int(im.get("n", 256)))
    chain = OpticsChain(float(im.get("magnification", 0.69)), float(im.get("psf_sigma_um", 0.0)))
    field = steady_state_field(pump, cfg.cavity)
    img = transmission_image(field, chain)
    inten = np.real(img.grid)
    rows = [(x, y, inten[i, j]) for i, x in enumerate(img.x) for j, y in enumerate(img.y)]
    _write_csv(args.out, ["x_um", "y_um", "intensity"], rows)
    outs = [args.out]
    if args.pgm:
        write_pgm16(args.pgm, inten.T)
        outs.append(args.pgm)
    try:
        w = extract_gaussian_width(img)
        print(f"spot sigma_major={w.sigma_major:.4g} um sigma_minor={w.sigma_minor:.4g} um "
              f"angle={w.angle:.3g} deg")
    except CavityKitError as exc:
        print(f"width fit failed: {exc}")
    return outs


def cmd_dynamics(args, cfg):
    from .dynamics import MeanFieldModel, MeanFieldState, RampProtocol, integrate
    from .threshold import critical_pump

    model = MeanFieldModel(cfg.cloud, cfg.cavity, cfg.pump, args.n_max)
    if args.omega_max is not None:
        om = mhz(args.omega_max)
    else:
        om = args.omega_factor * critical_pump(cfg.cloud, cfg.cavity, cfg.pump).omega_c
    ramp = RampProtocol.linear(om, args.duration, args.seed_amplitude)
    s0 = MeanFieldState.normal(len(model.basis), args.seed_amplitude)
    tr = integrate(s0, cfg.cloud, cfg.cavity, cfg.pump, ramp, tol=args.tol,
                   n_samples=args.samples, model=model)
    rows = zip(tr.t, tr.psi_f_sq, tr.psi_b_sq, tr.flux, to_mhz(tr.omega))
    _write_csv(args.out, ["t_us", "psi_f_sq", "psi_b_sq", "flux_proxy", "omega_t_over_2pi_MHz"],
               rows)
    return [args.out]


# parser -------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n(see --help for schemas)\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON configuration file")
    common.add_argument("--out", required=True, help="primary output file")
    p = _Parser(prog="cavity-kit", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("modes", parents=[common], help="mode list with weights")
    s.add_argument("--n-max", type=int, default=20)
    s.set_defaults(func=cmd_modes)

    s = sub.add_parser("greens-map", parents=[common], help="D(r, source) on a square grid")
    s.add_argument("--source", type=_pair, default=(0.0, 0.0), help="x,y in um")
    s.add_argument("--extent", type=float, default=60.0, help="grid width in um")
    s.add_argument("--n", type=int, default=121)
    s.add_argument("--pgm", help="also write |D| as a 16-bit PGM")
    s.set_defaults(func=cmd_greens_map)

    s = sub.add_parser("coop-curve", parents=[common], help="enhancement versus detuning")
    s.add_argument("--detunings", type=_range, required=True, help="MHz, start:stop:step")
    s.add_argument("--point", action="store_true", help="point particle instead of the cloud")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_coop_curve)

    s = sub.add_parser("threshold-scan", parents=[common], help="critical pump scans")
    s.add_argument("--mode", choices=("detuning", "position"), required=True)
    s.add_argument("--detunings", type=_range, help="MHz, start:stop:step (default -40:-320:20)")
    s.add_argument("--positions", type=_range, help="um, start:stop:step (default -12:12:1)")
    s.add_argument("--first-order", action="store_true", help="drop the dispersive term")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_threshold_scan)

    for name, func in (("fit", cmd_fit), ("bootstrap", cmd_bootstrap)):
        s = sub.add_parser(name, parents=[common], help=f"{name} on a dataset CSV")
        src = s.add_mutually_exclusive_group()
        src.add_argument("--data", help="dataset CSV")
        src.add_argument("--synthetic", action="store_true",
                         help="synthesize the 8 + 18 scan design from [fit] truth values")
        s.add_argument("--data-out", help="write the synthetic dataset CSV here")
        if name == "fit":
            s.add_argument("--jacobian", choices=("analytic", "central"), default="analytic")
        else:
            s.add_argument("--n-resamples", type=int, default=300)
            s.add_argument("--seed", type=int, help="overrides [run] seed")
            s.add_argument("--ensemble", help="CSV of all bootstrap refits")
        s.set_defaults(func=func)

    s = sub.add_parser("deconvolve", parents=[common], help="Voigt deconvolution of a scan")
    s.add_argument("--data", help="profile CSV x_um,value (default: simulate from config)")
    s.add_argument("--positions", type=_range, help="um for the simulated scan")
    s.set_defaults(func=cmd_deconvolve)

    s = sub.add_parser("image", parents=[common], help="pumped-cavity transmission image")
    s.add_argument("--pgm")
    s.set_defaults(func=cmd_image)

    s = sub.add_parser("dynamics", parents=[common], help="mean-field pump ramp")
    s.add_argument("--duration", type=float, default=30.0, help="us")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--omega-max", type=float, help="final Omega / 2pi in MHz")
    g.add_argument("--omega-factor", type=float, default=1.3, help="final Omega / Omega_c")
    s.add_argument("--n-max", type=int, default=20)
    s.add_argument("--samples", type=int, default=2001)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--seed-amplitude", type=float, default=1e-6)
    s.set_defaults(func=cmd_dynamics)
    return p


def _manifest(args, argv, cfg, outputs, started):
    return {
        "command": args.command,
        "argv": list(argv),
        "config_hash": cfg.config_hash,
        "seed": getattr(args, "seed", None) if getattr(args, "seed", None) is not None
        else cfg.seed,
        "tool_version": __version__,
        "outputs": [str(o) for o in outputs],
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


VALUE_FLAGS = ("--detunings", "--positions", "--source", "--omega-max")


def _glue_values(argv):
    """Turn ``--detunings -80:-320:20`` into ``--detunings=-80:-320:20``.

    argparse otherwise takes a leading minus for an option name.
    """
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv) and re.match(r"-[\d.]", argv[i + 1]):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"cavity-kit: config error: {exc}", file=sys.stderr)
        return 2
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    try:
        outputs = args.func(args, cfg)
    except UsageError as exc:
        print(f"cavity-kit: {exc}", file=sys.stderr)
        return 2
    except _AllFailed as exc:
        _write_json(f"{args.out}.manifest.json", _manifest(args, argv, cfg, exc.outputs, started))
        print(f"cavity-kit: {exc}", file=sys.stderr)
        return 1
    except CavityKitError as exc:
        print(f"cavity-kit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _write_json(f"{args.out}.manifest.json", _manifest(args, argv, cfg, outputs, started))
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
