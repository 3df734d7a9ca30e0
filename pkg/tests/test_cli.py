import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherekl import cli
from spherekl import simulator as sim


def sim_args(tmp_path, *extra, name="out.csv"):
    return [
        "simulate", "--spectrum", "coef:nu1=3,nu2=2", "--J", "6", "--K", "4", "--nlat", "4", "--nlon", "8",
        "--times", "0,0.5", "--seed", "42", "--out", str(tmp_path / name), *extra,
    ]


def test_simulate_writes_csv_and_provenance(tmp_path, capsys):
    assert cli.main(sim_args(tmp_path, "--binary", str(tmp_path / "out.bin"))) == 0
    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert len(lines) == 1 + 32 * 2
    prov = (tmp_path / "out.csv.provenance.txt").read_text()
    assert "config.seed = 42" in prov and "config.threads = 1" in prov
    header, values = sim.read_binary(tmp_path / "out.bin")
    assert values.shape == (2, 4, 8)
    assert "simulate:" in capsys.readouterr().out


def test_same_seed_gives_identical_csv(tmp_path):
    assert cli.main(sim_args(tmp_path, name="a.csv")) == 0
    assert cli.main(sim_args(tmp_path, "--threads", "2", name="b.csv")) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_points_file_input(tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("# colatitude,longitude\n0.1,0.2\n1.5,3.0\n")
    args = ["simulate", "--points", str(pts), "--J", "3", "--K", "2", "--times", "0.25", "--out", str(tmp_path / "p.csv")]
    assert cli.main(args) == 0
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 3


def test_bound_prints_key_values(tmp_path, capsys):
    out = tmp_path / "bound.txt"
    assert cli.main(["bound", "--J", "50", "--K", "50", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    fields = dict(line.split(" = ") for line in out.read_text().splitlines())
    assert float(fields["bound_sq"]) == pytest.approx(float(fields["P"]) + 8.2 * float(fields["Q"]), rel=1e-12)
    assert "bound_sq = " in text


def test_table_pivot_and_csv(tmp_path, capsys):
    out = tmp_path / "t.csv"
    args = ["table", "--spectrum", "coef2", "--scenarios", "3:2", "--J", "50,100", "--K", "50", "--out", str(out)]
    assert cli.main(args) == 0
    stdout = capsys.readouterr().out.splitlines()
    assert stdout[0] == "J,3:2:1.5|K=50"
    assert len(out.read_text().splitlines()) == 3


def test_table_diagnose(tmp_path, capsys):
    args = ["table", "--scenarios", "3:2", "--J", "50", "--K", "50", "--diagnose", "yes", "--out", str(tmp_path / "t.csv")]
    assert cli.main(args) == 0
    assert sum(line.startswith("diagnose") for line in capsys.readouterr().out.splitlines()) == 4


def test_kernel_grid(tmp_path):
    out = tmp_path / "k.csv"
    args = ["kernel-grid", "--J", "5", "--K", "5", "--ntheta", "3", "--nlag", "2", "--out", str(out)]
    assert cli.main(args) == 0
    assert len(out.read_text().splitlines()) == 1 + 6


def test_verify_roundtrip_subcommand(tmp_path):
    stem = tmp_path / "v"
    assert cli.main(["verify", "--check", "roundtrip", "--J", "4", "--K", "3", "--out", str(stem)]) == 0
    assert (tmp_path / "v-roundtrip.txt").is_file() and (tmp_path / "v-roundtrip.csv").is_file()


def test_bench_subcommand(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert cli.main(["bench", "--sizes", "20,40", "--J", "3", "--K", "3", "--repetitions", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n_points,seconds,ratio" and len(lines) == 3


@pytest.mark.parametrize(
    "argv, field",
    [
        (["bound", "--J", "-1"], "J"),
        (["bound", "--epsilon", "0"], "epsilon"),
        (["bound", "--spectrum", "coef:nu1=3"], "spectrum"),
        (["bound", "--spectrum", "coef3:nu1=3,nu2=2"], "spectrum"),
        (["bench", "--sizes", "200,100"], "sizes"),
        (["verify", "--reps", "50"], "reps"),
        (["simulate", "--times", "0"], "nlat"),
        (["bound", "--threads", "0"], "threads"),
        (["table", "--spectrum", "foo"], "spectrum"),
    ],
)
def test_configuration_errors_exit_2(argv, field, capsys):
    assert cli.main(argv) == 2
    assert f"error: {field}:" in capsys.readouterr().err


def test_runtime_error_exits_1(tmp_path, capsys):
    (tmp_path / "taken").mkdir()
    args = sim_args(tmp_path, name="taken")
    assert cli.main(args) == 1
    assert "error:" in capsys.readouterr().err


def test_config_roundtrip():
    cfg = cli.build_config("table", {"scenarios": "3:2:1.5,2:2", "J": "50,100", "convention": "mode-sum"}, threads=3)
    back = cli.RunConfig.from_ini(cfg.to_ini())
    assert back == cfg
    assert back["scenarios"] == [(3.0, 2.0, 1.5), (2.0, 2.0)]


@given(J=st.integers(0, 500), K=st.integers(0, 500), eps=st.floats(0.01, 100.0), seed=st.integers(0, 2**64 - 1))
@settings(max_examples=30, deadline=None)
def test_config_roundtrip_property(J, K, eps, seed):
    cfg = cli.build_config("bound", {"J": str(J), "K": str(K), "epsilon": repr(eps)}, threads=1)
    assert cli.RunConfig.from_ini(cfg.to_ini()) == cfg
    vcfg = cli.build_config("verify", {"seed": str(seed)}, threads=1)
    assert cli.RunConfig.from_ini(vcfg.to_ini())["seed"] == seed


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\nthreads = 2\n\n[bound]\nJ = 10\nK = 20\n")
    cfg = cli.config_from_args(["bound", "--config", str(path), "--K", "30"])
    assert cfg["J"] == 10 and cfg["K"] == 30 and cfg.threads == 2


def test_missing_config_file(tmp_path):
    assert cli.main(["bound", "--config", str(tmp_path / "nope.ini")]) == 2


def test_unknown_config_option(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[bound]\nfoo = 1\n")
    with pytest.raises(cli.ConfigError) as err:
        cli.config_from_args(["bound", "--config", str(path)])
    assert err.value.field == "foo"


def test_thread_default_from_environment(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.config_from_args(["bound"]).threads == 3
    assert cli.config_from_args(["bound", "--threads", "1"]).threads == 1
    monkeypatch.delenv(cli.THREADS_ENV)
    assert cli.config_from_args(["bound"]).threads == 1


def test_spectrum_file_input(tmp_path):
    from spherekl import spectra

    sp = spectra.explicit_spectrum([[1.0, 0.5], [0.25, 0.0]])
    path = tmp_path / "spec.txt"
    path.write_text(spectra.to_text(sp, None))
    parsed, _ = cli.parse_spectrum(str(path))
    assert parsed.coeff(0, 1) == 0.5 and parsed.coeff(1, 0) == 0.25


class FakeTimer:
    def __init__(self, durations):
        self.durations = iter(durations)
        self.now = 0.0
        self.started = False

    def __call__(self):
        if self.started:
            self.now += next(self.durations)
        self.started = not self.started
        return self.now


def test_bench_single_size_has_no_ratio():
    rows = cli.bench([10], 2, 2, repetitions=1)
    assert len(rows) == 1 and rows[0].ratio is None
    assert cli.bench_csv(rows).splitlines()[1].endswith(",")


def test_bench_takes_median_of_repetitions():
    timer = FakeTimer([5.0, 1.0, 2.0, 4.0, 9.0, 3.0])
    rows = cli.bench([10, 20], 2, 2, repetitions=3, timer=timer)
    assert [r.seconds for r in rows] == [2.0, 4.0]
    assert rows[1].ratio == pytest.approx(2.0)
    assert math.isfinite(rows[1].seconds)


def test_bench_rejects_unsorted_sizes():
    with pytest.raises(ValueError):
        cli.bench([20, 10], 2, 2)
