"""``supercell`` command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
Numbers in CSV output carry 6 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

from . import antenna, calibration, capacity, core, coverage, propagation, windload
from .config import RunConfig, load_config
from .errors import InvalidArgument, NumericalError, SupercellError

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


def g6(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([g6(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _sweep(text: str) -> tuple[float, float, float]:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if not (step > 0 and stop >= start > 0):
        raise argparse.ArgumentTypeError("sweep needs 0 < start <= stop and step > 0")
    return start, stop, step


def _arrays(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.split(","):
        try:
            nv, nh = item.lower().split("x")
            out.append((int(nv), int(nh)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected NVxNH pairs like 56x6, got {item!r}") from None
    return out


# --------------------------------------------------------------------------
# subcommands


def cmd_linkbudget(args):
    budget = core.LinkBudgetInput(
        tx_power_dbm=args.tx_power,
        tx_gain_dbi=args.tx_gain,
        rx_gain_dbi=args.rx_gain,
        pathloss_db=args.pathloss,
        bandwidth_hz=args.bandwidth,
        noise_figure_db=args.nf,
        temperature_k=args.temperature,
    )
    res = core.evaluate_link_budget(budget)
    rows = [
        ("rx_power_dbm", res.rx_power_dbm),
        ("noise_power_dbm", res.noise_power_dbm),
        ("snr_db", res.snr_db),
    ]
    if args.snr_min is not None:
        rows.append(("mapl_db", core.mapl_db(budget, args.snr_min)))
    _emit(_csv(("quantity", "value"), rows), args.out)


def _spm_from_args(args) -> propagation.SpmParams:
    if getattr(args, "config", None):
        return load_config(args.config).spm_params()
    return propagation.tuned_spm(args.band)


def cmd_pathloss(args):
    if args.sweep:
        start, stop, step = args.sweep
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        distances = [start + k * step for k in range(n)]
    elif args.distance is not None:
        distances = [args.distance]
    else:
        raise InvalidArgument("one of --distance or --sweep is required")
    rows = []
    if args.model == "fspl":
        rows = [(d, propagation.fspl_db(d, args.freq)) for d in distances]
    else:
        params = _spm_from_args(args)
        for d in distances:
            ctx = propagation.PathContext(d, args.htx, args.hrx, not args.nlos, 0.0 if not args.nlos else args.ldiff)
            rows.append((d, propagation.spm_pathloss_db(params, ctx)))
    _emit(_csv(("d_m", "pathloss_db"), rows), args.out)


def cmd_beamwidth(args):
    model = core.BeamwidthModel(args.x_eta)
    if args.beamwidth is not None:
        rows = [(core.gain_from_beamwidth(args.beamwidth, model), args.beamwidth)]
    else:
        rows = [(g, core.beamwidth_from_gain(g, model)) for g in args.gain]
    _emit(_csv(("gain_dbi", "beamwidth_deg"), rows), args.out)


def _lens_model(args) -> antenna.LensModel:
    kwargs = {}
    if args.curve:
        kwargs["gain_curve"] = antenna.load_gain_curve(args.curve)
    if getattr(args, "radius", None):
        kwargs["radius_m"] = args.radius
    return antenna.LensModel(**kwargs)


def cmd_lens(args):
    model = _lens_model(args)
    if args.r is not None:
        eps = antenna.lens_permittivity(args.r, model.radius_m)
        _emit(_csv(("r_m", "radius_m", "permittivity"), [(args.r, model.radius_m, eps)]), args.out)
        return
    if args.gain is not None:
        rows = [(antenna.lens_diameter_for_gain(g, model), g) for g in args.gain]
    elif args.d_lambda is not None:
        rows = [(d, antenna.lens_gain_dbi(d, model)) for d in args.d_lambda]
    else:
        raise InvalidArgument("one of --d-lambda, --gain or --r is required")
    _emit(_csv(("d_lambda", "gain_dbi"), rows), args.out)


def cmd_panel(args):
    if args.target is not None:
        nv, nh = antenna.panel_elements_for_gain(args.target, args.element_gain, args.aspect)
    elif args.nv is not None and args.nh is not None:
        nv, nh = args.nv, args.nh
    else:
        raise InvalidArgument("give --target, or both --nv and --nh")
    arr = antenna.PanelArray(nv, nh, args.element_gain)
    _emit(_csv(("n_v", "n_h", "gain_dbi"), [(nv, nh, antenna.panel_gain_dbi(arr))]), args.out)


def cmd_epa(args):
    arrays = None
    if args.arrays:
        if len(args.arrays) != len(args.gains):
            raise InvalidArgument("--arrays needs one NVxNH pair per gain")
        arrays = dict(zip(args.gains, args.arrays))
    rows = windload.epa_comparison_table(
        args.gains, args.freq, args.element_gain, _lens_model(args), aspect=args.aspect, arrays=arrays
    )
    _emit(windload.epa_table_csv(rows), args.out)
    if args.budget is not None:
        budget = windload.EpaBudget(args.budget)
        for r in rows:
            for label, area in (("vertical", r.epa_vertical_ft2), ("horizontal", r.epa_horizontal_ft2),
                                ("lens", r.epa_lens_ft2)):
                if area is None:
                    continue
                ok, margin = windload.check_epa(windload.EpaResult.from_ft2(area), budget)
                print(f"{g6(r.gain_dbi)} dBi {label}: {'pass' if ok else 'FAIL'} margin {g6(margin)} ft2",
                      file=sys.stderr)


def cmd_capacity(args):
    if args.sigma < 0:
        raise InvalidArgument("--sigma must be >= 0")
    rows = capacity.capacity_vs_sectors(args.sigma, args.bandwidth, args.cnr, args.nmax, args.streams)
    _emit(capacity.curve_csv(rows), args.out)
    if args.optimal_threshold is not None:
        n = capacity.optimal_sector_count(rows, args.optimal_threshold)
        print(f"optimal_n_sectors {n}", file=sys.stderr)


def _heatmap_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {
        ("site", "tower_height_m"): args.tower_height,
        ("site", "tx_power_dbm"): args.tx_power,
        ("site", "x_m"): args.site_x,
        ("site", "y_m"): args.site_y,
        ("plan", "n_sectors"): args.sectors,
        ("plan", "peak_gain_dbi"): args.gain,
    }
    for (section, key), value in overrides.items():
        if value is not None:
            setattr(getattr(cfg, section), key, value)
    return cfg.validate()


def cmd_heatmap(args):
    grid = coverage.load_grid(args.terrain)
    cfg = _heatmap_config(args)
    site = cfg.build_site(grid)
    if not grid.contains(site.x, site.y):
        raise InvalidArgument(f"site ({site.x}, {site.y}) lies outside the terrain grid")
    rmap = coverage.compute_rsrp_map(grid, site, workers=args.workers)
    coverage.save_rsrp_grid(rmap, f"{args.out}.asc")
    if args.pgm:
        Path(f"{args.out}.pgm").write_bytes(coverage.rsrp_to_pgm(rmap))
    s = coverage.summary(rmap, args.threshold)
    print(f"cells {s['cells']}")
    print(f"min_rsrp_dbm {s['min_rsrp_dbm']:.1f}")
    print(f"max_rsrp_dbm {s['max_rsrp_dbm']:.1f}")
    if args.threshold is not None:
        print(f"covered_km2_at_{g6(args.threshold)}_dbm {g6(s['covered_km2'])}")
        print(f"covered_pct {g6(s['covered_pct'])}")


def cmd_coverage_ratio(args):
    sc = coverage.load_rsrp_map(args.sc)
    mc = coverage.load_rsrp_map(args.mc)
    rows = coverage.coverage_ratio_table(sc, mc, args.thresholds)
    _emit(coverage.ratio_table_csv(rows), args.out)


def cmd_calibrate(args):
    records, constants = calibration.read_measurements(args.measurements)
    for key, flag in (("tx_power_dbm", args.tx_power), ("tx_gain_dbi", args.tx_gain), ("rx_gain_dbi", args.rx_gain)):
        if flag is not None:
            constants[key] = flag
    grid = coverage.load_grid(args.terrain) if args.terrain else None
    site = None
    if args.site_x is not None or args.site_y is not None:
        if args.site_x is None or args.site_y is None:
            raise InvalidArgument("--site-x and --site-y must be given together")
        site = (args.site_x, args.site_y)
    resolved = [calibration.resolve_record(r, site, grid, constants) for r in records]
    base = _spm_from_args(args)
    if args.free:
        unknown = set(args.free) - set(calibration.REGRESSORS)
        if unknown:
            raise InvalidArgument(f"--free: unknown coefficient(s) {sorted(unknown)}")
        fixed = set(calibration.REGRESSORS) - set(args.free)
    else:
        fixed = calibration.DEFAULT_FIXED
    fit = calibration.fit_spm(resolved, fixed, base)
    coef_rows = [
        (name, float(getattr(fit.params, name)), "fixed" if (name in fit.fixed_mask or name == "f_clutter") else "fitted")
        for name in propagation.SPM_COEFFICIENTS
    ]
    text = _csv(("parameter", "value", "status"), coef_rows)
    text += "\n" + _csv(
        ("error_statistic", "value_db"),
        [("mean", fit.stats.mean_db), ("standard_deviation", fit.stats.std_db), ("rms", fit.stats.rms_db)],
    )
    text += f"\nn_points,{fit.n_points}\n"
    _emit(text, args.out)


def cmd_fit_sigma(args):
    xs, ys = [], []
    with open(args.input, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.lstrip().startswith("#"))
        cols = set(reader.fieldnames or [])
        if not {"pathloss_db", "sigma_deg"} <= cols:
            raise InvalidArgument(f"{args.input}: need columns pathloss_db and sigma_deg")
        for row in reader:
            try:
                xs.append(float(row["pathloss_db"]))
                ys.append(float(row["sigma_deg"]))
            except (TypeError, ValueError):
                raise InvalidArgument(f"{args.input}: non-numeric row {row}") from None
    a, b = calibration.fit_exponential(xs, ys)
    _emit(_csv(("a_deg", "b_per_db"), [(a, b)]), args.out)


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="supercell", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=func)
        return sp

    def out(sp):
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = add("linkbudget", cmd_linkbudget, "Evaluate a link budget and optional MAPL")
    sp.add_argument("--tx-power", type=float, required=True, help="dBm")
    sp.add_argument("--tx-gain", type=float, required=True, help="dBi")
    sp.add_argument("--rx-gain", type=float, required=True, help="dBi")
    sp.add_argument("--pathloss", type=float, required=True, help="dB")
    sp.add_argument("--bandwidth", type=float, required=True, help="Hz")
    sp.add_argument("--nf", type=float, required=True, help="receiver noise figure, dB")
    sp.add_argument("--temperature", type=float, default=core.T0_K, help="noise temperature, K")
    sp.add_argument("--snr-min", type=float, help="also report MAPL for this minimum SNR (dB)")
    out(sp)

    sp = add("pathloss", cmd_pathloss, "Evaluate the SPM (or free space) for one distance or a sweep")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--distance", type=float, help="m")
    g.add_argument("--sweep", type=_sweep, help="start:stop:step in metres")
    sp.add_argument("--model", choices=("spm", "fspl"), default="spm")
    sp.add_argument("--band", default="2500", choices=propagation.tuned_bands(), help="tuned SPM set")
    sp.add_argument("--config", help="run config whose spm section is used")
    sp.add_argument("--htx", type=float, default=30.0, help="effective Tx height, m")
    sp.add_argument("--hrx", type=float, default=2.0, help="Rx height, m")
    sp.add_argument("--nlos", action="store_true", help="use the NLOS coefficients")
    sp.add_argument("--ldiff", type=float, default=0.0, help="diffraction loss for NLOS, dB")
    sp.add_argument("--freq", type=float, default=2500.0, help="MHz (free-space model)")
    out(sp)

    sp = add("beamwidth", cmd_beamwidth, "Beamwidth from gain (or gain from beamwidth)")
    sp.add_argument("--gain", type=_float_list, default=[28.0], help="comma-separated dBi")
    sp.add_argument("--beamwidth", type=float, help="deg; report the gain instead")
    sp.add_argument("--x-eta", type=float, default=core.DEFAULT_X_ETA, help="deg^2")
    out(sp)

    sp = add("lens", cmd_lens, "Luneburg lens gain curve and permittivity profile")
    sp.add_argument("--d-lambda", type=_float_list, help="diameters in wavelengths")
    sp.add_argument("--gain", type=_float_list, help="gains to invert to diameters")
    sp.add_argument("--r", type=float, help="radial position for permittivity, m")
    sp.add_argument("--radius", type=float, help="lens radius, m")
    sp.add_argument("--curve", help="two-column gain curve file")
    out(sp)

    sp = add("panel", cmd_panel, "Flat-panel array gain or sizing")
    sp.add_argument("--nv", type=int)
    sp.add_argument("--nh", type=int)
    sp.add_argument("--target", type=float, help="size an array for this gain, dBi")
    sp.add_argument("--aspect", type=float, default=9.3, help="n_v / n_h shape target")
    sp.add_argument("--element-gain", type=float, default=antenna.DEFAULT_ELEMENT_GAIN_DBI)
    out(sp)

    sp = add("epa", cmd_epa, "EPA comparison of panel and lens antennas")
    sp.add_argument("--gains", type=_float_list, required=True, help="comma-separated dBi")
    sp.add_argument("--freq", type=float, default=2500.0, help="MHz")
    sp.add_argument("--element-gain", type=float, default=antenna.DEFAULT_ELEMENT_GAIN_DBI)
    sp.add_argument("--aspect", type=float, default=9.3)
    sp.add_argument("--arrays", type=_arrays, help="explicit NVxNH per gain, e.g. 56x6,42x4")
    sp.add_argument("--curve", help="lens gain curve file")
    sp.add_argument("--budget", type=float, help="EPA limit in ft2; pass/fail lines go to stderr")
    out(sp)

    sp = add("capacity", cmd_capacity, "Total capacity versus number of sectors")
    sp.add_argument("--sigma", type=float, required=True, help="azimuth spread, deg")
    sp.add_argument("--bandwidth", type=float, required=True, help="Hz")
    sp.add_argument("--cnr", type=float, required=True, help="total CNR, dB")
    sp.add_argument("--nmax", type=int, required=True, help="largest sector count (<= 72)")
    sp.add_argument("--streams", type=int, default=capacity.STREAMS)
    sp.add_argument("--optimal-threshold", type=float, help="report the saturation point on stderr")
    out(sp)

    sp = add("heatmap", cmd_heatmap, "RSRP heatmap over a terrain grid")
    sp.add_argument("--terrain", required=True, help="ESRI ASCII grid")
    sp.add_argument("--config", help="run config (JSON)")
    sp.add_argument("--out", required=True, help="output prefix (.asc and optional .pgm)")
    sp.add_argument("--pgm", action="store_true", help="also write an 8-bit PGM rendering")
    sp.add_argument("--threshold", type=float, help="report covered area at this RSRP, dBm")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--tower-height", type=float)
    sp.add_argument("--tx-power", type=float)
    sp.add_argument("--site-x", type=float)
    sp.add_argument("--site-y", type=float)
    sp.add_argument("--sectors", type=int)
    sp.add_argument("--gain", type=float, help="sector peak gain, dBi")

    sp = add("coverage-ratio", cmd_coverage_ratio, "SC/MC coverage-area ratio table from two RSRP rasters")
    sp.add_argument("--sc", required=True, help="SuperCell RSRP grid")
    sp.add_argument("--mc", required=True, help="macrocell RSRP grid")
    sp.add_argument("--thresholds", type=_float_list, default=list(coverage.DEFAULT_THRESHOLDS_DBM))
    out(sp)

    sp = add("calibrate", cmd_calibrate, "Fit SPM coefficients to drive-test measurements")
    sp.add_argument("--measurements", required=True, help="measurement CSV")
    sp.add_argument("--terrain", help="grid for resolving LOS / diffraction")
    sp.add_argument("--site-x", type=float)
    sp.add_argument("--site-y", type=float)
    sp.add_argument("--band", default="2500", choices=propagation.tuned_bands(), help="starting/fixed values")
    sp.add_argument("--config", help="run config whose spm section supplies fixed values")
    sp.add_argument("--free", type=lambda s: [c.strip() for c in s.split(",") if c.strip()],
                    help="comma-separated coefficients to fit (others held)")
    sp.add_argument("--tx-power", type=float)
    sp.add_argument("--tx-gain", type=float)
    sp.add_argument("--rx-gain", type=float)
    out(sp)

    sp = add("fit-sigma", cmd_fit_sigma, "Fit sigma = a*exp(b*PL) to (pathloss_db, sigma_deg) data")
    sp.add_argument("--input", required=True, help="CSV with pathloss_db,sigma_deg columns")
    out(sp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"supercell {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SupercellError, OSError) as exc:
        print(f"supercell {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
