"""Effective potentials and heating rates for both regimes, with the
equivalent free-space standing-wave trap for comparison.

Builds the trap-drive coefficient tables, derives U(rho), U(x), dE/dt along
both axes, and the same quantities for a classical free-space trap of equal
peak intensity.  A second pass rescales heating to energy gained per
oscillation period as a fraction of the well depth, which is the cleanest
way to see that one regime is conservative and the other diffusive.

Run:  python demos/potentials_and_heating.py [--out demo_out] [--plot]
"""

import argparse
import json
from pathlib import Path

from cavtrap import free_space, tables
from cavtrap.cli import ensure_table
from cavtrap.config import resolve_config


def profiles_for(preset, out):
    cfg = resolve_config(preset=preset, out=str(out))
    trap = ensure_table(cfg, "trap", out)
    result = {}
    for axis in ("radial", "axial"):
        prof = tables.effective_potential(trap, axis)
        tables.save_profile(prof, out / f"{preset}_cavity_{axis}.csv")
        result[("cavity", axis)] = prof
    omega0 = free_space.calibrate_rabi_peak(cfg.trap_params, trap_table=trap)
    fsp = free_space.FreeSpaceParams(
        rabi_peak=omega0, detuning=cfg.trap_params.delta_probe,
        gamma=cfg.trap_params.gamma, wavelength=cfg.trap_params.wavelength,
        waist=cfg.trap_params.waist, mass=cfg.trap_params.mass)
    radial, axial = free_space.build_free_space_profiles(fsp, n_grid=cfg.n_grid)
    for axis, prof in (("radial", radial), ("axial", axial)):
        tables.save_profile(prof, out / f"{preset}_free_space_{axis}.csv",
                            {"calibration": "loaded", "rabi_peak": omega0})
        result[("free_space", axis)] = prof

    summary = {
        "well_depth_mK": result[("cavity", "radial")].well_depth(),
        "radial_frequency_kHz": tables.small_amplitude_frequency(
            result[("cavity", "radial")], cfg.trap_params.mass),
        "axial_frequency_kHz": tables.small_amplitude_frequency(
            result[("cavity", "axial")], cfg.trap_params.mass),
        "peak_axial_heating_mK_per_ms": float(result[("cavity", "axial")].heating.max()),
        "free_space_peak_axial_heating_mK_per_ms":
            float(result[("free_space", "axial")].heating.max()),
        "heating_per_radial_period_fraction": float(
            tables.heating_per_period(result[("cavity", "radial")],
                                      cfg.trap_params.mass).max()),
    }
    summary["axial_heating_ratio_free_over_cavity"] = (
        summary["free_space_peak_axial_heating_mK_per_ms"]
        / summary["peak_axial_heating_mK_per_ms"])
    (out / f"{preset}_summary.json").write_text(json.dumps(summary, indent=1,
                                                           sort_keys=True))
    print(f"{preset}: depth {summary['well_depth_mK']:.2f} mK, "
          f"f_r {summary['radial_frequency_kHz']:.2f} kHz, "
          f"f_a {summary['axial_frequency_kHz']:.0f} kHz, "
          f"axial heating x{summary['axial_heating_ratio_free_over_cavity']:.1f} "
          f"in free space")
    return result


def plot(results, out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for preset, res in results.items():
        fig, axes = plt.subplots(2, 2, figsize=(9, 6))
        for j, axis in enumerate(("radial", "axial")):
            cav, fs = res[("cavity", axis)], res[("free_space", axis)]
            axes[0, j].plot(cav.coordinate, cav.potential, label="cavity")
            axes[0, j].plot(fs.coordinate, fs.potential, "--", label="free space")
            axes[0, j].set_ylabel("U (mK)")
            axes[1, j].plot(cav.coordinate, cav.heating)
            axes[1, j].plot(fs.coordinate, fs.heating, "--")
            axes[1, j].set_ylabel("dE/dt (mK/ms)")
            axes[1, j].set_xlabel(f"{axis} coordinate (um)")
            axes[0, j].set_title(axis)
        axes[0, 0].legend()
        fig.suptitle(preset)
        fig.tight_layout()
        fig.savefig(out / f"{preset}_profiles.png", dpi=130)
    print(f"plots written to {out}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="demo_out")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = {p: profiles_for(p, out) for p in ("hood", "pinkse")}
    if args.plot:
        plot(results, out)


if __name__ == "__main__":
    main()
