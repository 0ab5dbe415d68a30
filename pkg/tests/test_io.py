import json

import numpy as np
import pytest

from fexpd.core.exceptions import DataError
from fexpd.core.io import (
    OutputStage,
    csv_text,
    read_chain_csv,
    read_path_csv,
    report_text,
    table_text,
    write_chain_csv,
    write_path_csv,
    write_report_json,
)
from fexpd.core.models.results import PosteriorChain, SamplePath
from fexpd.core.response import create_report


def test_csv_text_layout():
    text = csv_text(["a", "b"], [[1, 0.1], [True, None]], {"config_hash": "abc"})
    assert text.splitlines() == ["# config_hash=abc", "a,b", "1,0.1", "true,"]


def test_table_text_columns_follow_first_record():
    text = table_text([{"n": 8, "x": 1.5}, {"x": 2.5, "n": 16}])
    assert text.splitlines() == ["n,x", "8,1.5", "16,2.5"]
    assert table_text([]) == "\n"


def test_path_csv_is_bit_exact(tmp_path, rng):
    path = SamplePath(
        values=rng.standard_normal(64), seed=42, truth_hash="f00d", generator="circulant"
    )
    target = write_path_csv(path, tmp_path / "path.csv", "cafe")
    lines = target.read_text().splitlines()
    assert lines[0] == "# config_hash=cafe"
    assert lines[4] == "# truth_hash=f00d"
    assert lines[5] == "x"
    assert len(lines) == 6 + 64
    assert all("," not in line for line in lines[6:])
    loaded = read_path_csv(target)
    np.testing.assert_array_equal(loaded.values, path.values)
    assert loaded.seed == 42
    assert loaded.truth_hash == "f00d"
    assert loaded.generator == "circulant"


def test_read_single_column(tmp_path):
    source = tmp_path / "data.csv"
    source.write_text("x\n" + "\n".join(str(v) for v in range(10)) + "\n")
    loaded = read_path_csv(source)
    assert loaded.n == 10
    assert loaded.seed is None
    assert loaded.generator == "data"


@pytest.mark.parametrize(
    "content",
    [
        "y\n1\n2\n3\n4\n5\n6\n7\n8\n",
        "x\n1\n2\n3\n",
        "x\n1\n2\n3\n4\n5\n6\n7\nnan\n",
        "x\n1\n2\nthree\n4\n5\n6\n7\n8\n",
        "t,x\n1,2,3\n",
        "",
    ],
)
def test_read_path_rejects(tmp_path, content):
    source = tmp_path / "bad.csv"
    source.write_text(content)
    with pytest.raises(DataError):
        read_path_csv(source)


def test_read_path_missing(tmp_path):
    with pytest.raises(DataError) as info:
        read_path_csv(tmp_path / "missing.csv")
    assert info.value.exit_code == 2


def test_chain_csv(tmp_path, rng):
    chain = PosteriorChain(
        k=1,
        d=rng.uniform(-0.4, 0.4, 5),
        theta=rng.standard_normal((5, 2)),
        log_post=rng.standard_normal(5),
        acceptance={"d": 0.3},
        scales={"d": 0.1},
        seed=9,
        warmup=10,
    )
    target = write_chain_csv(chain, tmp_path / "chain_k1.csv", "cafe")
    assert "iteration,d,theta_0,theta_1,log_post" in target.read_text()
    loaded = read_chain_csv(target)
    assert loaded.k == 1
    assert loaded.seed == 9
    assert loaded.warmup == 10
    np.testing.assert_array_equal(loaded.theta, chain.theta)
    np.testing.assert_array_equal(loaded.d, chain.d)


def test_read_chain_rejects_path_csv(tmp_path):
    write_path_csv(SamplePath(values=np.ones(8)), tmp_path / "p.csv", "cafe")
    with pytest.raises(DataError):
        read_chain_csv(tmp_path / "p.csv")


def test_report_json(tmp_path):
    report = create_report({"b": 1, "a": [0.5]}, config_hash="cafe", command="rates")
    text = report_text(report)
    assert text == report_text(report)
    payload = json.loads(write_report_json(report, tmp_path / "r.json").read_text())
    assert payload["success"] is True
    assert payload["meta"]["config_hash"] == "cafe"
    assert payload["meta"]["command"] == "rates"


def test_output_stage_writes_on_commit(tmp_path):
    out = tmp_path / "out"
    stage = OutputStage(out)
    stage.add("b.csv", "b\n")
    stage.add("a.json", "{}\n")
    assert stage.names == ["a.json", "b.csv"]
    assert not out.exists()
    written = stage.commit()
    assert [p.name for p in written] == ["a.json", "b.csv"]
    assert (out / "b.csv").read_text() == "b\n"
    # no temporary siblings are left behind
    assert sorted(p.name for p in out.iterdir()) == ["a.json", "b.csv"]
