import json
from pathlib import Path

import pytest

from cwtail.core.kernels import KernelSpec
from cwtail.core.types import CensoredSample
from cwtail.core.utils import write_json
from cwtail.infra.dataset_repo import bundled_larynx_path, load_csv
from cwtail.services.fit_service import FitRequest, run_fit
from cwtail.settings import Settings
from cwtail.tail import gamma_conditional

GOLDEN = Path(__file__).parent / "data" / "larynx_golden.json"


@pytest.fixture(scope="module")
def larynx_fit():
    req = FitRequest(input=bundled_larynx_path(), survival_level=0.05, xs=(65.0,), ks=(54, 37))
    return run_fit(req, Settings())


def test_cv_bandwidth(larynx_fit):
    assert larynx_fit.h_source == "cv"
    assert larynx_fit.h == pytest.approx(90.0)


@pytest.mark.parametrize(
    "k, gamma, gamma_tol, q, q_tol",
    [(54, 0.8226, 0.08, 17.62, 2.0), (37, 1.0176, 0.10, 23.21, 2.5)],
)
def test_published_values(larynx_fit, k, gamma, gamma_tol, q, q_tol):
    (row,) = [r for r in larynx_fit.rows if r.tail.k == k]
    assert row.tail.gamma_hat == pytest.approx(gamma, abs=gamma_tol)
    assert row.quantile.q_hat == pytest.approx(q, abs=q_tol)


def test_study_table_layout():
    req = FitRequest(input=bundled_larynx_path(), survival_level=0.05, ks=(54, 37))
    table = run_fit(req, Settings()).study_table()
    assert list(table.columns) == ["54.20", "65.00", "75.80"]
    assert list(table.index) == ["gamma_hat (k=54)", "q_hat (k=54)", "gamma_hat (k=37)", "q_hat (k=37)"]


def test_golden_file():
    assert GOLDEN.exists(), f"Missing {GOLDEN.name}: run scripts/pin_larynx_golden.py and commit it"
    golden = json.loads(GOLDEN.read_text(encoding="utf-8"))
    req = FitRequest(input=bundled_larynx_path(), survival_level=golden["survival_level"], ks=(54, 37))
    result = run_fit(req, Settings())
    assert result.kernel.value == golden["kernel"]
    assert result.h == pytest.approx(golden["h"], abs=1e-9)
    for got, want in zip(result.rows, golden["rows"], strict=True):
        assert got.x == pytest.approx(want["x"], abs=1e-9)
        assert got.tail.k == want["k"]
        assert got.tail.gamma_hat == pytest.approx(want["gamma_hat"], abs=1e-9)
        assert got.quantile.q_hat == pytest.approx(want["q_hat"], abs=1e-9)
        assert got.tail.y_n == pytest.approx(want["y_n"], abs=1e-9)


def test_regression_payload_survives_write_json(tmp_path):
    req = FitRequest(input=bundled_larynx_path(), survival_level=0.05, xs=(65.0,), ks=(54,))
    payload = run_fit(req, Settings()).regression_payload()
    out = write_json(tmp_path / "golden.json", payload)
    assert json.loads(out.read_text(encoding="utf-8")) == payload
    assert set(payload) == {"kernel", "h", "survival_level", "rows"}
    assert set(payload["rows"][0]) == {"x", "k", "gamma_hat", "q_hat", "y_n"}


def test_uniform_weights_equal_a_flat_covariate(larynx_path):

    req = FitRequest(input=larynx_path, survival_level=0.05, xs=(30.0, 65.0), ks=(37,), uniform_weights=True)
    rows = run_fit(req, Settings()).rows
    assert rows[0].tail.gamma_hat == rows[1].tail.gamma_hat
    assert rows[0].quantile.q_hat == rows[1].quantile.q_hat

    sample = load_csv(larynx_path).sample
    flat = CensoredSample.from_arrays([0.0] * sample.n, sample.z, sample.delta)
    same = gamma_conditional(flat, 0.0, 1.0, KernelSpec.BIQUADRATIC, 37)
    assert same.gamma_hat == rows[0].tail.gamma_hat
