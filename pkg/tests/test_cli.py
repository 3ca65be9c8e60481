import csv
import io
import subprocess
import sys
from pathlib import Path

import pytest

from ccnlab import cli

FIXTURES = Path(__file__).parent / "fixtures"
TINY = ["--topo", "line:4", "--seed", "1", "--duration", "2", "--rate", "2"]


def rows(text: str) -> list[dict]:
    body = "".join(l for l in io.StringIO(text) if not l.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def invoke(capsys, *argv) -> tuple[int, str, str]:
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestModel:
    def test_defaults(self, capsys):
        code, out, _ = invoke(capsys, "model")
        assert code == 0
        assert out.startswith("# ccnlab")
        data = rows(out)
        assert len(data) == 41 * 4
        k1 = [float(r["probability"]) for r in data if r["class"] == "1"]
        assert max(k1) == pytest.approx(0.148, abs=5e-4)

    def test_zero_delay_row(self, capsys):
        _, out, _ = invoke(capsys, "model")
        assert all(float(r["probability"]) == 0.0 for r in rows(out) if r["delay_ms"] == "0.0")

    def test_hit_profile(self, capsys):
        _, out, _ = invoke(capsys, "model", "--hit-rates", "0.8,0.5,0.3,0.1")
        k2 = [float(r["probability"]) for r in rows(out) if r["class"] == "2"]
        assert max(k2) < 0.05

    def test_header_echoes_settings(self, capsys):
        _, out, _ = invoke(capsys, "model", "--lambda1", "20")
        assert "# lambda1=20.0" in out


class TestRun:
    def test_golden(self, capsys):
        code, out, _ = invoke(capsys, "run", "--mode", "stateful", *TINY)
        assert code == 0
        assert out == (FIXTURES / "golden_run_line4_stateful.csv").read_text()

    def test_byte_identical(self, capsys):
        _, a, _ = invoke(capsys, "run", "--mode", "stateless", *TINY)
        _, b, _ = invoke(capsys, "run", "--mode", "stateless", *TINY)
        assert a == b

    @pytest.mark.parametrize("mode,nonzero", [("stateful", True), ("stateless", False)])
    def test_pit_ops(self, capsys, mode, nonzero):
        _, out, _ = invoke(capsys, "run", "--mode", mode, *TINY)
        pit = sum(int(r["value"]) for r in rows(out)
                  if r["metric"] in ("pit_inserts", "pit_lookups", "pit_deletes"))
        assert (pit > 0) is nonzero

    def test_replicas_in_seed_order(self, capsys, tmp_path):
        rtt = tmp_path / "rtt.csv"
        _, serial, _ = invoke(capsys, "run", "--mode", "stateless", "--replicas", "2", *TINY)
        _, parallel, _ = invoke(capsys, "run", "--mode", "stateless", "--replicas", "2",
                                "--jobs", "2", "--rtt-out", str(rtt), *TINY)
        assert serial == parallel
        ids = [r["run_id"] for r in rows(serial)]
        assert ids == sorted(ids) and set(ids) == {"stateless-s1", "stateless-s2"}
        assert rtt.read_text().startswith("hops,mean_rtt_s,stddev,count")

    def test_summary_on_stderr(self, capsys):
        _, _, err = invoke(capsys, "run", "--mode", "stateless", *TINY)
        assert "conserved=True" in err and "hops mean_rtt_s" in err

    def test_cost_override(self, capsys):
        _, out, _ = invoke(capsys, "run", "--mode", "stateless", "--cost", "fib_lookup=0.5", *TINY)
        assert "# cost.fib_lookup=0.5" in out

    def test_topology_file(self, capsys, tmp_path):
        from ccnlab.simnet import generate_topology
        path = tmp_path / "t.topo"
        generate_topology("line", n=4, mode=cli.ForwarderMode.STATEFUL).save(path)
        code, out, _ = invoke(capsys, "run", "--mode", "file", "--topo", str(path), "--seed", "1",
                              "--duration", "1")
        assert code == 0 and "file-s1" in out


class TestErrors:
    def test_bad_cost(self, capsys):
        code, _, err = invoke(capsys, "run", "--mode", "stateless", "--cost", "warp=1", *TINY)
        assert code == cli.EXIT_CONFIG and "bad cost override" in err

    def test_missing_topology_file(self, capsys):
        code, _, _ = invoke(capsys, "run", "--mode", "stateless", "--topo", "/nonexistent",
                            "--seed", "1")
        assert code == cli.EXIT_CONFIG

    def test_bad_duration(self, capsys):
        code, _, _ = invoke(capsys, "run", "--mode", "stateless", "--topo", "line:3",
                            "--seed", "1", "--duration", "-2")
        assert code == cli.EXIT_CONFIG

    def test_seed_required(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["run", "--mode", "stateless"])
        assert e.value.code == 2

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            cli.main([])

    def test_conservation_failure(self, capsys, monkeypatch):
        real = cli._run_many

        def leaky(configs, jobs):
            results = real(configs, jobs)
            results[0].lost += 1
            return results

        monkeypatch.setattr(cli, "_run_many", leaky)
        code, _, _ = invoke(capsys, "run", "--mode", "stateless", *TINY)
        assert code == cli.EXIT_CONSERVATION


class TestAttackAndCompare:
    def test_attack(self, capsys):
        code, out, err = invoke(
            capsys, "attack", "--topo", "tree:1x3", "--seed", "1", "--duration", "4",
            "--pit-capacity", "20", "--pit-lifetime", "1", "--flood-rate", "200",
            "--attack-start", "1", "--attack-stop", "3")
        assert code == 0
        modes = {r["mode"] for r in rows(out)}
        assert modes == {"stateful", "stateless", "hybrid"}
        assert "attack window" in err

    def test_compare_ratio(self, capsys):
        code, out, err = invoke(capsys, "compare", "--topo", "tree:2x2", "--seed", "1",
                                "--duration", "2")
        assert code == 0
        ops = {r["mode"]: float(r["ops_per_interest"]) for r in rows(out)}
        assert ops["stateless"] / ops["stateful"] == pytest.approx(2 / 3)
        assert "stateless/stateful ops per interest = 0.6667" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ccnlab", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "ccnlab" in res.stdout
