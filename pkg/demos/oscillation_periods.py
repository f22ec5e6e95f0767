"""Transmission-modulation period vs amplitude against the orbit-period curve.

In the strongly conservative regime an atom's radial orbit imprints periodic
modulations on the transmitted light; their period-vs-amplitude relation maps
out the anharmonic radial well.  Extracted modulation events are tagged with
the atom's angular momentum; low-|L| events hug the one-dimensional curve,
which only happens when diffusion is weak over an orbit.

Run:  python demos/oscillation_periods.py --preset hood [--n 300] [--plot]
"""

import argparse
from pathlib import Path

import numpy as np

from cavtrap import analysis, tables, trajectory
from cavtrap.cli import ensure_table
from cavtrap.config import resolve_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="hood")
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--out", default="demo_out")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = resolve_config(preset=args.preset, out=str(out), n=args.n)
    trap = ensure_table(cfg, "trap", out)
    probe = ensure_table(cfg, "probe", out)

    profile = tables.effective_potential(trap, "radial")
    curve = analysis.period_amplitude_theory(
        profile, analysis.transmission_vs_radius(trap, cfg.trigger.observable),
        trap.params.mass)
    np.savetxt(out / f"{cfg.preset}_period_theory.csv",
               np.column_stack([curve.rho_max, curve.amplitude, curve.period]),
               delimiter=",", fmt="%.10g", header="rho_max,A,P", comments="")

    setup = trajectory.TransitSetup(probe_table=probe, trap_table=trap,
                                    trigger=cfg.trigger, initial=cfg.initial,
                                    integrator=cfg.integrator, triggered=True,
                                    preset_id=cfg.preset)
    res = trajectory.run_ensemble(setup, cfg.n_trajectories, cfg.base_seed)
    fc = cfg.analysis["modulation_cutoff_khz"]
    settle = 3.0 / (fc * 1e-3)
    events = []
    for rec in res.records:
        if rec.trigger_time is None:
            continue
        try:
            w = analysis.record_duration(
                rec, cfg.trigger,
                threshold_sigma=cfg.analysis["duration_threshold_sigma"])
        except analysis.NoTransit:
            continue
        sig = analysis.bandwidth_process(rec.t,
                                         rec.transmission(cfg.trigger.observable), fc)
        evs = analysis.extract_modulations(
            sig.t, sig.filtered,
            t_min=rec.trigger_time + cfg.trigger.delay + settle, t_max=w.t_end)
        analysis.tag_angular_momentum(evs, rec, trap.params)
        events.extend(evs)
    analysis.save_modulations(events, out / f"{cfg.preset}_modulations.csv",
                              {"seed": cfg.base_seed, "preset": cfg.preset})
    periods = np.array([e.period for e in events])
    amps = np.array([e.amplitude for e in events])
    frac = np.mean(np.abs(periods - curve.period_at(amps))
                   <= 0.2 * curve.period_at(amps)) if events else 0.0
    print(f"{len(events)} modulation events; {frac * 100:.0f}% within 20% of "
          f"the orbit-period curve")

    if args.plot and events:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        lam = np.abs([e.angular_momentum for e in events])
        lo = lam <= np.percentile(lam, 33.3)
        fig, ax = plt.subplots(figsize=(6, 4.2))
        ax.plot(curve.amplitude, curve.period, "k-", label="orbit-period curve")
        ax.plot(amps[~lo], periods[~lo], ".", ms=4, label="high |L|")
        ax.plot(amps[lo], periods[lo], "o", ms=4, mfc="none", label="lowest |L| third")
        ax.set_xlabel("modulation amplitude A")
        ax.set_ylabel("modulation period P (us)")
        ax.set_ylim(0, min(periods.max() * 1.2, curve.period[-1]))
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"{cfg.preset}_periods.png", dpi=130)
        print(f"plot written to {out}")


if __name__ == "__main__":
    main()
