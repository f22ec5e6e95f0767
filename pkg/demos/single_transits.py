"""A handful of triggered transits, shown the way the experiments see them.

For each simulated atom: the radial orbit (z vs y), the axial excursion, the
ideal infinite-bandwidth transmission, and the bandwidth-limited noisy
transmission an experimenter would record.

Run:  python demos/single_transits.py [--preset hood] [--n 4] [--plot]
"""

import argparse
from pathlib import Path

import numpy as np

from cavtrap import analysis, trajectory
from cavtrap.cli import ensure_table
from cavtrap.config import resolve_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="hood")
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", default="demo_out")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = resolve_config(preset=args.preset, out=str(out))
    setup = trajectory.TransitSetup(
        probe_table=ensure_table(cfg, "probe", out),
        trap_table=ensure_table(cfg, "trap", out),
        trigger=cfg.trigger, initial=cfg.initial, integrator=cfg.integrator,
        triggered=True, preset_id=cfg.preset)

    kept = []
    index = 0
    while len(kept) < args.n and index < 40 * args.n:
        rec = trajectory.run_transit(setup, args.seed, index=index)
        index += 1
        if rec.trigger_time is None:
            continue
        kept.append(rec)
        rec.save(out / f"{args.preset}_transit_{len(kept)}.csv")
        dur = analysis.record_duration(
            rec, cfg.trigger,
            threshold_sigma=cfg.analysis["duration_threshold_sigma"]).duration
        print(f"transit {len(kept)}: trigger at {rec.trigger_time:.0f} us, "
              f"duration {dur:.0f} us, ends by {rec.termination}")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        rng = np.random.default_rng(0)
        for i, rec in enumerate(kept, 1):
            obs = rec.transmission(cfg.trigger.observable)
            noisy = analysis.bandwidth_process(
                rec.t, obs, cfg.trigger.bandwidth_khz,
                noise_model=("heterodyne" if cfg.trigger.observable == "heterodyne"
                             else "counting"),
                rng=rng, noise_sigma=cfg.trigger.noise_sigma,
                noise_ref_signal=cfg.trigger.noise_ref_signal,
                count_rate=cfg.trigger.count_rate,
                count_window=cfg.trigger.window)
            fig, axes = plt.subplots(4, 1, figsize=(8, 9), sharex=False)
            axes[0].plot(rec.r[:, 1], rec.r[:, 2], lw=0.6)
            axes[0].set_xlabel("y (um)"); axes[0].set_ylabel("z (um)")
            axes[0].set_title(f"{args.preset} transit {i}")
            axes[1].plot(rec.t, rec.r[:, 0], lw=0.5)
            axes[1].set_ylabel("x (um)")
            axes[2].plot(rec.t, obs, lw=0.4)
            axes[2].set_ylabel("ideal transmission")
            axes[3].plot(noisy.t, noisy.filtered, lw=0.6)
            axes[3].set_ylabel("detected")
            axes[3].set_xlabel("t (us)")
            fig.tight_layout()
            fig.savefig(out / f"{args.preset}_transit_{i}.png", dpi=130)
        print(f"plots written to {out}")


if __name__ == "__main__":
    main()
