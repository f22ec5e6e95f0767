"""Windowed-FFT spectrograms of the photon-number record for long transits.

In the fountain regime the atom is repeatedly heated along the standing wave,
producing bursts of fast transmission oscillation near twice the axial
frequency whether the atom stays in one well or skips across several; the
reliable discriminator is the drop of near-DC spectral content during
flights, not the presence of a high-frequency peak.

Run:  python demos/axial_spectrograms.py [--n 200] [--plot]
"""

import argparse
from pathlib import Path

import numpy as np

from cavtrap import analysis, trajectory
from cavtrap.cli import ensure_table
from cavtrap.config import resolve_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="pinkse")
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--out", default="demo_out")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = resolve_config(preset=args.preset, out=str(out), n=args.n)
    setup = trajectory.TransitSetup(
        probe_table=ensure_table(cfg, "probe", out),
        trap_table=ensure_table(cfg, "trap", out),
        trigger=cfg.trigger, initial=cfg.initial, integrator=cfg.integrator,
        triggered=True, preset_id=cfg.preset)
    res = trajectory.run_ensemble(setup, cfg.n_trajectories, cfg.base_seed)
    recs = sorted([r for r in res.records if r.trigger_time is not None],
                  key=lambda r: r.t[-1] - r.t[0], reverse=True)[:3]

    w = cfg.analysis["spectrogram_window_us"]
    step = cfg.analysis["spectrogram_step_us"]
    lam = cfg.trap_params.wavelength
    for i, rec in enumerate(recs, 1):
        spec = analysis.spectrogram(rec.t, rec.photon_number, window=w, step=step)
        labels = analysis.classify_axial_activity(rec, w, step, lam)
        analysis.save_spectrogram(spec, out / f"{cfg.preset}_spectrogram_{i}.csv",
                                  {"seed": cfg.base_seed, "preset": cfg.preset,
                                   "record_index": rec.index})
        n_burst = int(np.sum(labels == "burst"))
        n_flight = int(np.sum(labels == "flight"))
        print(f"transit {i}: {rec.t[-1] - rec.t[0]:.0f} us, "
              f"{n_burst} burst / {n_flight} flight windows")
        if args.plot:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt

            fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True,
                                     gridspec_kw={"height_ratios": [1, 1, 2]})
            axes[0].plot(rec.t, rec.photon_number, lw=0.3)
            axes[0].set_ylabel("photon number")
            axes[1].plot(rec.t, rec.r[:, 0], lw=0.5)
            axes[1].set_ylabel("x (um)")
            sel = spec.frequencies <= 1.2
            axes[2].pcolormesh(spec.times, spec.frequencies[sel] * 1e3,
                               spec.magnitudes[:, sel].T, shading="auto")
            axes[2].set_ylabel("frequency (kHz)")
            axes[2].set_xlabel("t (us)")
            fig.tight_layout()
            fig.savefig(out / f"{cfg.preset}_spectrogram_{i}.png", dpi=130)
    if args.plot:
        print(f"plots written to {out}")


if __name__ == "__main__":
    main()
