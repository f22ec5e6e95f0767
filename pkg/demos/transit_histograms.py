"""Transit-duration histograms: triggered trapping vs constant drive.

Runs both ensembles for a preset and compares the duration statistics, which
is the headline evidence that raising the drive on a detected atom actually
traps it.  With --flip-friction the sign of the velocity-dependent force is
reversed, which collapses the trapping in the fountain regime (the atoms are
no longer recaptured after axial heating bursts).

Run:  python demos/transit_histograms.py --preset pinkse [--n 400]
"""

import argparse
from pathlib import Path

from cavtrap import analysis, trajectory
from cavtrap.cli import ensure_table
from cavtrap.config import resolve_config


def run_case(cfg, tables_, triggered, n, label):
    setup = trajectory.TransitSetup(
        probe_table=tables_[0], trap_table=tables_[1], trigger=cfg.trigger,
        initial=cfg.initial, integrator=cfg.integrator, triggered=triggered,
        preset_id=cfg.preset)
    res = trajectory.run_ensemble(setup, n, cfg.base_seed)
    recs = ([r for r in res.records if r.trigger_time is not None]
            if triggered else res.records)
    durs, _, miss = analysis.ensemble_durations(
        recs, cfg.trigger,
        threshold_sigma=cfg.analysis["duration_threshold_sigma"])
    hist = analysis.duration_histogram(durs, cfg.analysis["histogram_bin_us"])
    print(f"{label}: mean {hist.mean:.0f} us, dispersion {hist.dispersion:.0f} us "
          f"({hist.n} transits, {miss} below the noise)")
    return hist


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="pinkse")
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--out", default="demo_out")
    ap.add_argument("--flip-friction", action="store_true")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    set_args = ["integrator.friction_sign=-1.0"] if args.flip_friction else []
    cfg = resolve_config(preset=args.preset, set_args=set_args, out=str(out),
                         n=args.n)
    tabs = (ensure_table(cfg, "probe", out), ensure_table(cfg, "trap", out))
    hists = {}
    for triggered, label in ((False, "untriggered"), (True, "triggered")):
        hists[label] = run_case(cfg, tabs, triggered, cfg.n_trajectories, label)
        analysis.save_histogram(hists[label],
                                out / f"{cfg.preset}_{label}_durations.csv",
                                {"seed": cfg.base_seed, "preset": cfg.preset,
                                 "triggered": triggered,
                                 "friction_sign": cfg.integrator.friction_sign})

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(9, 3.2), sharey=True)
        for ax, (label, h) in zip(axes, hists.items()):
            ax.stairs(h.counts, h.edges)
            ax.set_title(f"{label}: mean {h.mean:.0f} us")
            ax.set_xlabel("transit duration (us)")
        axes[0].set_ylabel("events")
        fig.tight_layout()
        fig.savefig(out / f"{cfg.preset}_histograms.png", dpi=130)
        print(f"plot written to {out}")


if __name__ == "__main__":
    main()
