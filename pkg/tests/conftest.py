"""Shared fixtures: resolved preset configs, coefficient tables, ensembles.

Table building dominates the suite runtime, so tables are session-scoped and
cached on disk (CAVTRAP_TEST_CACHE overrides the cache directory, which lets
repeated local runs skip the builds).
"""

import os

import pytest

from cavtrap import trajectory
from cavtrap.cli import ensure_table
from cavtrap.config import resolve_config


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    env = os.environ.get("CAVTRAP_TEST_CACHE")
    if env:
        os.makedirs(env, exist_ok=True)
        return env
    return tmp_path_factory.mktemp("table_cache")


@pytest.fixture(scope="session")
def hood_cfg():
    return resolve_config(preset="hood")


@pytest.fixture(scope="session")
def pinkse_cfg():
    return resolve_config(preset="pinkse")


@pytest.fixture(scope="session")
def hood_tables(hood_cfg, cache_dir):
    return (ensure_table(hood_cfg, "probe", cache_dir, quiet=True),
            ensure_table(hood_cfg, "trap", cache_dir, quiet=True))


@pytest.fixture(scope="session")
def pinkse_tables(pinkse_cfg, cache_dir):
    return (ensure_table(pinkse_cfg, "probe", cache_dir, quiet=True),
            ensure_table(pinkse_cfg, "trap", cache_dir, quiet=True))


@pytest.fixture(scope="session")
def hood_small_tables(cache_dir):
    cfg = resolve_config(preset="hood", set_args=["table.n_grid=64"])
    return (ensure_table(cfg, "probe", cache_dir, quiet=True),
            ensure_table(cfg, "trap", cache_dir, quiet=True))


def make_setup(cfg, tables, triggered=True, **integrator_overrides):
    from dataclasses import replace

    integ = (replace(cfg.integrator, **integrator_overrides)
             if integrator_overrides else cfg.integrator)
    return trajectory.TransitSetup(
        probe_table=tables[0], trap_table=tables[1], trigger=cfg.trigger,
        initial=cfg.initial, integrator=integ, triggered=triggered,
        preset_id=cfg.preset)


@pytest.fixture(scope="session")
def hood_ensembles(hood_cfg, hood_tables):
    out = {}
    for key, trig in (("triggered", True), ("untriggered", False)):
        setup = make_setup(hood_cfg, hood_tables, triggered=trig)
        out[key] = trajectory.run_ensemble(setup, hood_cfg.n_trajectories,
                                           hood_cfg.base_seed)
    return out


@pytest.fixture(scope="session")
def pinkse_ensembles(pinkse_cfg, pinkse_tables):
    out = {}
    for key, trig, fric in (("triggered", True, 1.0),
                            ("untriggered", False, 1.0),
                            ("flipped", True, -1.0)):
        setup = make_setup(pinkse_cfg, pinkse_tables, triggered=trig,
                           friction_sign=fric)
        out[key] = trajectory.run_ensemble(setup, pinkse_cfg.n_trajectories,
                                           pinkse_cfg.base_seed)
    return out
