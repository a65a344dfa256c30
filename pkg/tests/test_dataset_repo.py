import pytest

from cwtail.core.errors import EmptyFile, ParseError
from cwtail.core.types import CensoredSample
from cwtail.infra.dataset_repo import load_csv, summarize, write_csv


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_larynx_loads(larynx_path):
    ds = load_csv(larynx_path)
    assert ds.summary.n == 90
    assert ds.summary.uncensored == 50
    assert ds.summary.covariate_median == 65.0
    lo, mid, hi = ds.summary.points
    assert lo == pytest.approx(54.20, abs=0.05)
    assert mid == 65.0
    assert hi == pytest.approx(75.80, abs=0.05)
    # extra columns survive in the frame
    assert {"stage", "diagyr"} <= set(ds.frame.columns)
    assert len(ds.sample.ids) == 90


def test_header_aliases_and_spacing(tmp_path):
    p = _write(tmp_path, "Patient, Survival Time, Status, Age\na,1.5,1,60\nb, 2.0 ,0,61\n")
    ds = load_csv(p)
    assert ds.sample.z.tolist() == [1.5, 2.0]
    assert ds.sample.delta.tolist() == [True, False]
    assert ds.sample.x.tolist() == [60.0, 61.0]
    assert ds.sample.ids == ("a", "b")


def test_bad_rows_report_line_numbers(tmp_path):
    p = _write(tmp_path, "time,delta,covariate\n1.0,1,3\n-2,1,3\n3.0,2,3\n4.0,1,abc\n")
    with pytest.raises(ParseError) as exc:
        load_csv(p)
    lines = [ln for ln, _ in exc.value.problems]
    assert lines == [3, 4, 5]
    assert "línea 3" in str(exc.value)


def test_missing_columns_and_files(tmp_path):
    with pytest.raises(ParseError) as exc:
        load_csv(_write(tmp_path, "time,covariate\n1,2\n"))
    assert "delta" in str(exc.value)
    with pytest.raises(ParseError):
        load_csv(tmp_path / "nope.csv")
    with pytest.raises(EmptyFile):
        load_csv(_write(tmp_path, "", "empty.csv"))
    with pytest.raises(EmptyFile):
        load_csv(_write(tmp_path, "time,delta,covariate\n", "header.csv"))


def test_single_row_summary(tmp_path):
    ds = load_csv(_write(tmp_path, "time,delta,covariate\n2.5,1,40\n"))
    assert ds.summary.covariate_sd is None
    assert ds.summary.points == (40.0,)
    assert ds.summary.to_dict()["points"] == [40.0]


def test_write_then_load_keeps_floats(tmp_path, random_sample):
    s = random_sample(25)
    back = load_csv(write_csv(s, tmp_path / "out" / "s.csv")).sample
    assert back.z.tolist() == s.z.tolist()
    assert back.x.tolist() == s.x.tolist()
    assert back.delta.tolist() == s.delta.tolist()
    assert summarize(back) == summarize(s)


def test_summary_of_sample():
    s = CensoredSample.from_arrays([1.0, 2.0, 3.0, 10.0], [1.0, 1.0, 1.0, 1.0], [True, False, True, True])
    summary = summarize(s)
    assert summary.uncensored == 3
    assert summary.covariate_median == 2.5
    assert summary.covariate_min == 1.0
    assert summary.covariate_max == 10.0
