"""Session fixtures for the long flow runs shared across the suite.

The four reference runs (scalar bump, double shear at two resolutions,
product sine at two resolutions) each take seconds to minutes, so they run
once per session and every test reads the same records.
"""

import time
from types import SimpleNamespace

import pytest

from gmcf import cli
from gmcf.config import parse_config
from gmcf.flow import run

BUMP64_TEXT = """
# codimension-one collapse run
resolution = 64,64
family = scalar_bump
map.amplitude = 0.5
map.wavevector = 1,1
t_max = 20
tol_converged = 1e-8
sample_every = 1
"""

SHEAR_TEXT = """
# unit-determinant double shear, det corridor guarded every step
resolution = {N},{N}
family = shear_composition
map.eps = 0.4
map.delta = 0.4
t_max = 60
tol_converged = 1e-8
sample_every = 1
guard = area_preserving
preserve_tol = 5e-3
"""

PSINE_TEXT = """
# area-decreasing initial data, dilation guarded every step
resolution = {N},{N}
family = product_sine
map.amplitudes = 0.9,0.9
map.wavevectors = 1,0,0,1
t_max = 40
tol_converged = 1e-8
sample_every = 1
guard = area_decreasing
"""


def _run_flow(text):
    cfg = parse_config(text)
    t0 = time.perf_counter()
    state, records, status = run(cfg)
    elapsed = time.perf_counter() - t0
    return SimpleNamespace(
        cfg=cfg, state=state, records=records, status=status, elapsed=elapsed
    )


@pytest.fixture(scope="session")
def bump64(tmp_path_factory):
    """Scalar-bump run executed through the full CLI pipeline (CSV + JSON)."""
    outdir = tmp_path_factory.mktemp("bump64")
    csv_path = outdir / "run.csv"
    json_path = outdir / "run.json"
    cfg = parse_config(BUMP64_TEXT, (f"--csv={csv_path}", f"--json={json_path}"))
    t0 = time.perf_counter()
    state, records, status = cli.run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    return SimpleNamespace(
        cfg=cfg, state=state, records=records, status=status, elapsed=elapsed,
        csv_path=csv_path, json_path=json_path, outdir=outdir,
    )


@pytest.fixture(scope="session")
def shear64():
    return _run_flow(SHEAR_TEXT.format(N=64))


@pytest.fixture(scope="session")
def shear128():
    return _run_flow(SHEAR_TEXT.format(N=128))


@pytest.fixture(scope="session")
def psine64():
    return _run_flow(PSINE_TEXT.format(N=64))


@pytest.fixture(scope="session")
def psine128():
    return _run_flow(PSINE_TEXT.format(N=128))
