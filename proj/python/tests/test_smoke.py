import math
import pathlib

import numpy as np
import pytest

import rflab

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def write_sphere(tmp_path, t_end="0.05", record="1e-4"):
    cfg = tmp_path / "sphere.cfg"
    cfg.write_text(
        "[model]\nkind = product\nfactors = sphere 3 1.0\n"
        f"[flow]\nt_end = {t_end}\nrecord_every = {record}\n"
    )
    return cfg


def test_sphere_flow_matches_closed_form(tmp_path):
    columns, data, meta = rflab.flow(write_sphere(tmp_path))
    assert columns[:2] == ["t", "g_1_1"]
    t, g11 = data[:, 0], data[:, 1]
    np.testing.assert_allclose(g11, 1.0 - 4.0 * t, rtol=1e-8)
    assert meta["termination"] == "horizon-reached"
    assert meta["records"] == len(t)


def test_heisenberg_volume(tmp_path):
    columns, data, _ = rflab.flow(CONFIGS / "heisenberg.cfg", overrides=["flow.record_every=0.1"])
    t = data[:, columns.index("t")]
    vol = data[:, columns.index("vol")]
    np.testing.assert_allclose(vol, (1.0 + 3.0 * t) ** (1.0 / 6.0), rtol=1e-8)


def test_check_on_written_trajectory(tmp_path):

    columns, data, _ = rflab.flow(write_sphere(tmp_path))
    csv = tmp_path / "traj.csv"
    lines = [",".join(columns)] + [",".join(repr(float(v)) for v in row) for row in data]
    csv.write_text("\n".join(lines) + "\n")
    reports = rflab.check(write_sphere(tmp_path), csv, checks=["volume_identity"])
    assert [r["name"] for r in reports] == ["volume_identity"]
    assert reports[0]["status"] == "pass"


def test_schema_error_is_raised(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,g_1_1\n0,1\n")
    with pytest.raises(rflab.SchemaError):
        rflab.check(write_sphere(tmp_path), bad)


def test_config_error_is_raised(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[flow]\ngamma = -1\n")
    with pytest.raises(rflab.ConfigError):
        rflab.flow(cfg)
    assert issubclass(rflab.ConfigError, rflab.Error)


def test_constants_and_root():
    table = rflab.constants(CONFIGS / "constants_n4.cfg")
    assert table["moser_exact"]["sum_inv_q_next"] == "1/2"
    assert table["moser_exact"]["sum_inv_q"] == "3/4"
    root = rflab.solve_root(3, 1.0)
    assert 0.03 < root["root"] < 0.05
    x = root["root"]
    lhs = math.exp(2.0 * math.exp(8.0 / 3.0 * (1.0 + 6.0 * x)) * x)
    assert lhs == pytest.approx(8.0, rel=1e-12)


def test_exact_sums_and_holder():
    assert rflab.exact_moser_sums(6)["sum_inv_q_next"] == "2/3"
    reports = rflab.holder_suite(measures=50)
    assert len(reports) == 4
    assert all(r["status"] == "pass" for r in reports)
    assert "volume_identity" in rflab.check_names()
