import json
import math

import pytest

from envelab import cli
from envelab.bigtoeplitz import EscalationExhausted


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(tmp_path, exp, text, *extra, out="out"):
    cfg = write(tmp_path, text)
    return cli.main(["run", exp, "--config", str(cfg), "--out", str(tmp_path / out), *extra])


def test_constant_symbol_is_dirac_at_zero(tmp_path):
    assert run(tmp_path, "radial-distribution", "[radial-distribution]\nsymbol = constant\nk = 12\n") == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["passed"] and summary["failed"] == []
    assert all(c["tolerance"] is not None or c["mode"] == "true" for c in summary["checks"])
    rows = (tmp_path / "out" / "spectrum.csv").read_text().splitlines()
    assert rows[0] == "k,basis_index,neg_log_lambda"
    assert all(r.split(",")[2] == "0" for r in rows[1:])


@pytest.mark.parametrize("text", [
    "[ball-growth]\nks = -5 10\n",
    "[ball-growth]\nks = 10\nfoo = 1\n",
    "[other]\nks = 10\n",
    "[experiment]\nseed = -1\n",
    "not an ini file",
])
def test_bad_configs_exit_2(tmp_path, text):
    assert run(tmp_path, "ball-growth", text) == 2


def test_low_precision_flag_rejected(tmp_path):
    assert run(tmp_path, "arc-decay", "[arc-decay]\nks = 20:50:10\n", "--precision-bits", "32") == 2


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ENVELAB_THREADS", "many")
    assert run(tmp_path, "transfer-identity", "[transfer-identity]\nn_symbols = 1\n") == 2


def test_failed_check_exits_1(tmp_path):
    # the volume growth is far from its limit at small k
    assert run(tmp_path, "ball-growth", "[ball-growth]\nks = 4 8\n") == 1
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["failed"]


def test_escalation_exits_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise EscalationExhausted("forced")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert run(tmp_path, "property-suite", "") == 3


def test_reruns_are_byte_identical(tmp_path, monkeypatch):
    text = "[experiment]\nseed = 7\n[transfer-identity]\nn_symbols = 3\nk = 8\n"
    assert run(tmp_path, "transfer-identity", text, out="a") == 0
    monkeypatch.setenv("ENVELAB_THREADS", "2")
    assert run(tmp_path, "transfer-identity", text, out="b") == 0
    for name in ("transfer.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_fanout_matches_serial(tmp_path):
    text = "[radial-distribution]\nk = 30\nprobe_ks = 10 20 30\n"
    run(tmp_path, "radial-distribution", text, out="a")
    run(tmp_path, "radial-distribution", text, "--threads", "3", out="b")
    for name in ("spectrum.csv", "moment_probe.csv", "cdf.dat"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_parsing_helpers():
    assert cli.parse_int_list("20:80:10") == [20, 30, 40, 50, 60, 70, 80]
    assert cli.parse_int_list("1, 2 3") == [1, 2, 3]
    assert cli.parse_angle("pi/2") == pytest.approx(math.pi / 2)
    assert cli.parse_angle("2*pi/3") == pytest.approx(2 * math.pi / 3)
    assert cli.parse_angle("0.5") == 0.5


@pytest.mark.slow
def test_arc_decay_flagship(tmp_path):
    text = "[arc-decay]\nhalf_angles = pi/2\nks = 20:80:10\n"
    assert run(tmp_path, "arc-decay", text, "--threads", "4") == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    fits = (tmp_path / "out" / "fits.csv").read_text().splitlines()
    assert fits[0].split(",")[:3] == ["half_angle", "c_hat", "stderr"]
    gap = float(fits[1].split(",")[-1])
    assert gap <= 0.10
    assert summary["checks"][0]["tolerance"] == 0.10
