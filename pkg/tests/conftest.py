import sys
from pathlib import Path as _Path
sys.path.insert(0, str(_Path(__file__).resolve().parents[1] / "src"))

from pathlib import Path

import numpy as np
import pytest

from cwtail.core.types import CensoredSample
from cwtail.infra.dataset_repo import bundled_larynx_path


@pytest.fixture(autouse=True)
def isolated_env(tmp_path: Path, monkeypatch):
    """Keep the developer's CWTAIL_* settings out of the tests."""
    for name in ("CWTAIL_OUT_DIR", "CWTAIL_N_JOBS", "CWTAIL_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("CWTAIL_CONFIG", str(tmp_path / "no-config.yml"))


@pytest.fixture()
def larynx_path() -> Path:
    p = bundled_larynx_path()
    assert p.exists(), f"Missing bundled dataset: {p}"
    return p


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260418)


@pytest.fixture()
def out_dir(tmp_path: Path) -> Path:
    d = tmp_path / "out"
    d.mkdir()
    return d


@pytest.fixture()
def flat_sample():
    """All observations at x = 0: every kernel gives equal weights at x = 0."""

    def make(z, delta=None) -> CensoredSample:
        return CensoredSample.from_arrays([0.0] * len(z), z, delta)

    return make


@pytest.fixture()
def random_sample(rng):
    """Continuous (tie-free) censored sample with covariate in [0, 1]."""

    def make(n: int, censor_rate: float = 0.3) -> CensoredSample:
        x = rng.random(n)
        z = rng.weibull(1.5, n) + 0.01
        delta = rng.random(n) >= censor_rate
        return CensoredSample.from_arrays(x, z, delta)

    return make
