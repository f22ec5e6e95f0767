"""Command-line front end: table building, ensemble runs, and analyses.

Commands
--------
  cavtrap table build --preset hood --out OUT [--drive both|probe|trap]
  cavtrap sim run --preset hood --n 300 --seed 7 --out OUT
                  [--untriggered] [--flip-friction]
  cavtrap analyze histogram|periods|spectrogram --out OUT
  cavtrap analyze profiles --preset hood --out OUT [--compare free-space]
  cavtrap validity --preset hood [--delta-p DP]

All numeric outputs are CSV files with JSON sidecars embedding the resolved
config hash, base seed, preset id and code version; rerunning with the same
config and seed reproduces every file byte for byte (no timestamps).
Coefficient tables are cached under OUT/tables keyed by a content hash of
(system params, drive, grid size).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, free_space, tables, trajectory
from .config import ValidationError, config_hash, resolve_config, serialize_config
from .constants import KB


def _counter(label):
    def cb(i, n):
        if i == n or i % max(n // 10, 1) == 0:
            print(f"  {label}: {i}/{n}", flush=True)
    return cb


def _meta(cfg, **extra):
    meta = {"config_hash": config_hash(cfg), "seed": cfg.base_seed,
            "preset": cfg.preset, "code_version": __version__}
    meta.update(extra)
    return meta


def ensure_table(cfg, which, out_dir, quiet=False):
    """Load a cached coefficient table or build and cache it."""
    params = cfg.trap_params if which == "trap" else cfg.probe_params
    tdir = Path(out_dir) / "tables"
    tdir.mkdir(parents=True, exist_ok=True)
    key = tables.table_hash(params, cfg.n_grid, which)
    path = tdir / f"{key}.csv"
    if path.exists():
        if not quiet:
            print(f"table cache hit: {path}")
        return tables.load_table(path)
    if not quiet:
        print(f"building {which} table ({cfg.n_grid} points, "
              f"N = {params.resolved_cutoff()}) ...")
    table = tables.build_table(params, n_grid=cfg.n_grid, drive_label=which,
                               progress=None if quiet else _counter("rows"))
    tables.save_table(table, path)
    return table


def _setup_from_config(cfg, out_dir):
    probe = ensure_table(cfg, "probe", out_dir)
    trap = ensure_table(cfg, "trap", out_dir)
    return trajectory.TransitSetup(
        probe_table=probe, trap_table=trap, trigger=cfg.trigger,
        initial=cfg.initial, integrator=cfg.integrator,
        triggered=cfg.triggered, preset_id=cfg.preset)


def orchestrate(cfg):
    """table -> ensemble -> selected analyses, all persisted under out_dir."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(serialize_config(cfg))
    setup = _setup_from_config(cfg, out)
    print(f"running {cfg.n_trajectories} trajectories "
          f"({'triggered' if cfg.triggered else 'untriggered'}) ...")
    result = trajectory.run_ensemble(setup, cfg.n_trajectories, cfg.base_seed,
                                     progress=_counter("trajectories"))
    rec_dir = out / "records"
    rec_dir.mkdir(exist_ok=True)
    for rec in result.records:
        rec.save(rec_dir / f"traj_{rec.index:05d}.csv")
    summary = _meta(cfg, n_trajectories=len(result.records),
                    errors=result.errors,
                    terminations={k: sum(r.termination == k for r in result.records)
                                  for k in ("radial_exit", "axial_exit", "max_time")},
                    n_triggered=sum(r.trigger_time is not None
                                    for r in result.records))
    (out / "run_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1))
    status = 0
    for name in cfg.analyses:
        try:
            run_analysis(name, cfg, out, records=result.records)
        except Exception as exc:
            print(f"analysis {name!r} failed: {exc}", file=sys.stderr)
            status = 1
    if result.errors:
        print(f"{len(result.errors)} trajectories failed", file=sys.stderr)
        status = 1
    return status


def _load_records(out):
    rec_dir = Path(out) / "records"
    paths = sorted(rec_dir.glob("traj_*.csv"))
    if not paths:
        raise FileNotFoundError(f"no trajectory records under {rec_dir}; "
                                f"run `cavtrap sim run` first")
    return [trajectory.TrajectoryRecord.load(p) for p in paths]


def run_analysis(name, cfg, out, records=None):
    out = Path(out)
    if name == "profiles":
        return _analyze_profiles(cfg, out, compare=True)
    if records is None:
        records = _load_records(out)
    if name == "histogram":
        durations, _, n_miss = analysis.ensemble_durations(
            records, cfg.trigger,
            threshold_sigma=cfg.analysis["duration_threshold_sigma"])
        hist = analysis.duration_histogram(durations,
                                           cfg.analysis["histogram_bin_us"])
        analysis.save_histogram(hist, out / "durations.csv",
                                _meta(cfg, n_no_transit=n_miss,
                                      triggered=cfg.triggered))
        print(f"durations: mean = {hist.mean:.1f} us, dispersion = "
              f"{hist.dispersion:.1f} us, n = {hist.n} (+{n_miss} no-transit)")
        return 0
    if name == "periods":
        return _analyze_periods(cfg, out, records)
    if name == "spectrogram":
        return _analyze_spectrogram(cfg, out, records)
    raise ValueError(f"unknown analysis {name!r}")


def _analyze_periods(cfg, out, records):
    trap = ensure_table(cfg, "trap", out, quiet=True)
    profile = tables.effective_potential(trap, "radial")
    curve = analysis.period_amplitude_theory(
        profile, analysis.transmission_vs_radius(trap, cfg.trigger.observable),
        trap.params.mass)
    np.savetxt(out / "period_theory.csv",
               np.column_stack([curve.rho_max, curve.amplitude, curve.period]),
               delimiter=",", fmt="%.10g", header="rho_max,A,P", comments="")
    fc = cfg.analysis["modulation_cutoff_khz"]
    settle = 3.0 / (fc * 1e-3)   # filter transient after the drive switch, us
    events = []
    for rec in records:
        try:
            window = analysis.record_duration(
                rec, cfg.trigger,
                threshold_sigma=cfg.analysis["duration_threshold_sigma"])
        except analysis.NoTransit:
            continue
        t_lo = (rec.trigger_time + cfg.trigger.delay + settle
                if rec.trigger_time is not None else rec.t[0] + settle)
        sig = analysis.bandwidth_process(rec.t,
                                         rec.transmission(cfg.trigger.observable), fc)
        evs = analysis.extract_modulations(sig.t, sig.filtered,
                                           t_min=t_lo, t_max=window.t_end)
        analysis.tag_angular_momentum(evs, rec, trap.params)
        events.extend(evs)
    analysis.save_modulations(events, out / "modulations.csv", _meta(cfg))
    print(f"extracted {len(events)} modulation events")
    return 0


def _analyze_spectrogram(cfg, out, records, n_longest=3):
    w = cfg.analysis["spectrogram_window_us"]
    step = cfg.analysis["spectrogram_step_us"]
    by_len = sorted(records, key=lambda r: r.t[-1] - r.t[0], reverse=True)
    wrote = 0
    for rec in by_len[:n_longest]:
        try:
            spec = analysis.spectrogram(rec.t, rec.photon_number, window=w, step=step)
        except analysis.SignalTooShort:
            continue
        analysis.save_spectrogram(spec, out / f"spectrogram_{rec.index:05d}.csv",
                                  _meta(cfg, record_index=rec.index))
        wrote += 1
    print(f"wrote {wrote} spectrograms")
    return 0


def _analyze_profiles(cfg, out, compare=False):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    trap = ensure_table(cfg, "trap", out)
    for axis in ("radial", "axial"):
        prof = tables.effective_potential(trap, axis)
        tables.save_profile(prof, out / f"profile_cavity_{axis}.csv",
                            _meta(cfg, axis=axis, source="cavity"))
    if compare:
        omega0 = free_space.calibrate_rabi_peak(cfg.trap_params, trap_table=trap)
        fsp = free_space.FreeSpaceParams(
            rabi_peak=omega0, detuning=cfg.trap_params.delta_probe,
            gamma=cfg.trap_params.gamma, wavelength=cfg.trap_params.wavelength,
            waist=cfg.trap_params.waist, mass=cfg.trap_params.mass)
        radial, axial = free_space.build_free_space_profiles(fsp, n_grid=cfg.n_grid)
        for axis, prof in (("radial", radial), ("axial", axial)):
            tables.save_profile(prof, out / f"profile_free_space_{axis}.csv",
                                _meta(cfg, axis=axis, source="free_space",
                                      calibration="loaded",
                                      rabi_peak=omega0))
    print(f"profiles written to {out}")
    return 0


def _thermal_dp(params, temperature=20e-6):
    """Thermal momentum spread sqrt(m k_B T) in hbar*k units."""
    p_si = math.sqrt(params.mass * KB * temperature)     # kg m/s
    hbark = 1.054571817e-34 * params.k * 1e6             # kg m/s
    return p_si / hbark


def cmd_validity(cfg, delta_p):
    from .quantum import validity_report

    params = cfg.trap_params
    if delta_p is None:
        delta_p = _thermal_dp(params)
    rep = validity_report(params, delta_p)
    print(f"validity report ({cfg.preset}, delta_p = {delta_p:.2f} hbar k):")
    print(f"  recoil/gamma = {rep.recoil_over_gamma:.3e}")
    print(f"  recoil/kappa = {rep.recoil_over_kappa:.3e}")
    print(f"  epsilon1     = {rep.epsilon1:.3e}")
    print(f"  epsilon2     = {rep.epsilon2:.3e}")
    ok = max(rep.epsilon1, rep.epsilon2) < 0.3
    print(f"  quasiclassical approximation "
          f"{'holds' if ok else 'QUESTIONABLE'} at this momentum spread")
    return 0


def _add_common(p):
    p.add_argument("--preset", default=None,
                   help="hood | pinkse | pinkse_fig4 | custom")
    p.add_argument("--config", default=None, help="YAML config file")
    p.add_argument("--set", dest="set_args", action="append", default=[],
                   metavar="KEY=VALUE", help="dotted-path config override")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--n", type=int, default=None, help="number of trajectories")
    p.add_argument("--seed", type=int, default=None, help="base seed")


def build_parser():
    ap = argparse.ArgumentParser(prog="cavtrap", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p_table = sub.add_parser("table", help="coefficient tables")
    table_sub = p_table.add_subparsers(dest="subcommand", required=True)
    p_build = table_sub.add_parser("build")
    _add_common(p_build)
    p_build.add_argument("--drive", choices=("both", "probe", "trap"),
                         default="both")

    p_sim = sub.add_parser("sim", help="trajectory ensembles")
    sim_sub = p_sim.add_subparsers(dest="subcommand", required=True)
    p_run = sim_sub.add_parser("run")
    _add_common(p_run)
    p_run.add_argument("--untriggered", action="store_true",
                       help="hold the drive at the trap level throughout")
    p_run.add_argument("--flip-friction", action="store_true",
                       help="reverse the sign of the friction coefficient")

    p_an = sub.add_parser("analyze", help="post-processing")
    an_sub = p_an.add_subparsers(dest="subcommand", required=True)
    for name in ("histogram", "periods", "spectrogram", "profiles"):
        p = an_sub.add_parser(name)
        _add_common(p)
        if name == "profiles":
            p.add_argument("--compare", choices=("free-space",), default=None)

    p_val = sub.add_parser("validity", help="quasiclassical validity report")
    _add_common(p_val)
    p_val.add_argument("--delta-p", type=float, default=None,
                       help="momentum spread in hbar*k units")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(
            config_file=args.config, preset=args.preset,
            set_args=args.set_args, n=args.n, seed=args.seed, out=args.out,
            untriggered=getattr(args, "untriggered", False),
            flip_friction=getattr(args, "flip_friction", False))
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "table":
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        which = ("probe", "trap") if args.drive == "both" else (args.drive,)
        for w in which:
            ensure_table(cfg, w, out)
        return 0
    if args.command == "sim":
        return orchestrate(cfg)
    if args.command == "analyze":
        if args.subcommand == "profiles":
            return _analyze_profiles(cfg, cfg.out_dir,
                                     compare=args.compare == "free-space")
        return run_analysis(args.subcommand, cfg, cfg.out_dir)
    if args.command == "validity":
        return cmd_validity(cfg, args.delta_p)
    return 2


if __name__ == "__main__":
    sys.exit(main())
