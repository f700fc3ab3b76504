from __future__ import annotations

import json
import math

import numpy as np
import pandas as pd
import pytest

from src.artifacts import (
    ArtifactWriter,
    build_manifest,
    manifest_text,
    read_csv,
    read_profile,
    write_csv,
)
from src.config import RNG_ALGORITHM, TOOL_VERSION
from src.deterministic import TypeProfile
from src.errors import RatchetValueError
from src.plotting import chart_from_frame
from src.run_config import parse_config_file, resolve_config


# -----------------------------------------
# CSV and manifest files
# -----------------------------------------
def test_csv_has_reference_line_and_full_precision(tmp_path):
    frame = pd.DataFrame({"a": [1.0 / 3.0], "b": [2]})
    path = write_csv(frame, tmp_path / "x.csv", "# manifest=x.manifest seed=1")
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "# manifest=x.manifest seed=1"
    assert lines[1] == "a,b"
    assert float(lines[2].split(",")[0]) == 1.0 / 3.0
    assert read_csv(path)["b"].tolist() == [2]


def test_manifest_is_sorted_and_jsonable():
    manifest = build_manifest("wf", 7, z=np.float64(1.5), a=np.arange(3), inf=math.inf)
    text = manifest_text(manifest)
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert data["rng"] == RNG_ALGORITHM
    assert data["version"] == TOOL_VERSION
    assert data["a"] == [0, 1, 2]
    assert data["inf"] == "inf"
    assert "time" not in text


def test_writer_names_files_after_prefix(tmp_path):
    writer = ArtifactWriter(str(tmp_path / "run"), build_manifest("wf", 3))
    writer.write("clicks", pd.DataFrame({"time": [1.0]}))
    writer.write("run", pd.DataFrame({"time": [2.0]}))
    manifest_path = writer.finish(extra=1)
    assert manifest_path.name == "run.manifest"
    assert (tmp_path / "run.clicks.csv").exists()
    assert (tmp_path / "run.csv").exists()
    data = json.loads(manifest_path.read_text())
    assert data["artifacts"] == ["run.clicks.csv", "run.csv"]
    assert data["extra"] == 1
    assert (tmp_path / "run.clicks.csv").read_text().startswith("# manifest=run.manifest seed=3")


def test_profile_file_round_trip(tmp_path):
    x = TypeProfile(offset=2, freqs=np.array([0.25, 0.5, 0.25]))
    path = write_csv(x.to_frame(), tmp_path / "p.csv", "# profile")
    back = read_profile(path)
    assert back.offset == 2
    assert np.array_equal(back.freqs, x.freqs)


def test_profile_file_validation(tmp_path):
    gap = tmp_path / "gap.csv"
    gap.write_text("absolute_class_index,frequency\n0,0.5\n2,0.5\n")
    with pytest.raises(RatchetValueError, match="contiguous"):
        read_profile(gap)
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("k,frequency\n0,1.0\n")
    with pytest.raises(RatchetValueError, match="absolute_class_index"):
        read_profile(wrong)


# -----------------------------------------
# Run configuration
# -----------------------------------------
def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# desk run\nn = 1e4\nlambda = 0.1  # per generation\n\ngamma = 0.7\n")
    assert parse_config_file(path) == {"n": "1e4", "lambda": "0.1", "gamma": "0.7"}


@pytest.mark.parametrize("text", ["n 100\n", "colour = red\n", "n =\n"])
def test_config_file_rejects_bad_lines(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(RatchetValueError):
        parse_config_file(path)


def test_precedence_flags_over_env_over_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("n = 1000\nlambda = 0.1\ns = 0.02\nseed = 5\n")
    cfg = resolve_config("wf", {"n": None}, path, environ={})
    assert (cfg.N, cfg.lam, cfg.s, cfg.seed) == (1_000, 0.1, 0.02, 5)
    assert cfg.sources["seed"] == "file"

    cfg = resolve_config("wf", {}, path, environ={"RATCHET_SEED": "9"})
    assert cfg.seed == 9 and cfg.sources["seed"] == "env"

    cfg = resolve_config("wf", {"seed": 11, "n": 2_000}, path, environ={"RATCHET_SEED": "9"})
    assert (cfg.seed, cfg.N) == (11, 2_000)


def test_gamma_flag_replaces_s_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("n = 10000\nlambda = 0.1\ns = 0.02\n")
    cfg = resolve_config("wf", {"gamma": 0.7}, path, environ={})
    assert cfg.s is None
    assert cfg.params().s == pytest.approx(0.1 / (0.7 * math.log(1_000)), rel=1e-9)


def test_run_config_validation():
    with pytest.raises(RatchetValueError, match="not both"):
        resolve_config("wf", {"s": 0.1, "gamma": 0.5}, environ={})
    with pytest.raises(RatchetValueError):
        resolve_config("wf", {"seed": -1}, environ={})
    with pytest.raises(RatchetValueError, match="seed"):
        resolve_config("wf", {}, environ={"RATCHET_SEED": "abc"})
    with pytest.raises(RatchetValueError, match="format"):
        resolve_config("wf", {"format": "png"}, environ={})
    cfg = resolve_config("wf", {"n": 100}, environ={})
    with pytest.raises(RatchetValueError, match="--lambda"):
        cfg.params()


def test_formats_are_deduplicated():
    cfg = resolve_config("wf", {"format": "svg,csv,svg"}, environ={})
    assert cfg.formats == ("svg", "csv")


# -----------------------------------------
# Charts
# -----------------------------------------
def test_chart_defaults_to_first_numeric_column():
    frame = pd.DataFrame({"label": ["a", "b"], "x": [1.0, 2.0], "y": [3.0, 4.0]})
    spec = chart_from_frame(frame).to_dict()
    assert spec["encoding"]["x"]["field"] == "x"


def test_chart_rejects_unknown_columns():
    with pytest.raises(RatchetValueError):
        chart_from_frame(pd.DataFrame({"x": [1.0]}), x="x", ys=["missing"])
    with pytest.raises(RatchetValueError):
        chart_from_frame(pd.DataFrame({"label": ["a"]}))
