import json
import subprocess
import sys

import numpy as np
import pytest

from nhbloch.analytic import decay_f
from nhbloch.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main


def run(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def tpp_flags(tpp, *, model="analytic", samples=251, t_start=None, extra=()):
    flags = [
        "simulate",
        "--model",
        model,
        "--rabi-hz",
        repr(tpp.rabi_hz),
        "--mu",
        repr(tpp.decay.mu),
        "--delta-mu-ratio",
        "11.5",
        "--nu",
        repr(tpp.decay.nu),
        "--t-max",
        "500e-6",
        "--samples",
        str(samples),
    ]
    if t_start is not None:
        flags += ["--t-start", repr(t_start)]
    return flags + list(extra)


def read_csv(path):
    lines = path.read_text().splitlines()
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return lines[0], data


class TestSimulate:
    def test_analytic_table_matches_closed_form(self, tpp, tmp_path, capsys):
        out = tmp_path / "tpp.csv"
        code, _, _ = run(capsys, *tpp_flags(tpp, extra=("--out", str(out))))
        assert code == EXIT_OK
        header, data = read_csv(out)
        assert header == "t,mx,my,mz,purity"
        assert data.shape == (251, 5)
        t = data[:, 0]
        assert t[1] - t[0] == pytest.approx(2e-6, rel=1e-12)
        f = decay_f(tpp.decay, t)
        np.testing.assert_allclose(data[:, 1], f * np.sin(tpp.omega1 * t), atol=1e-12)
        np.testing.assert_allclose(data[:, 3], f * np.cos(tpp.omega1 * t), atol=1e-12)
        np.testing.assert_allclose(data[:, 2], 0.0, atol=1e-12)

    def test_purity_column_in_bounds(self, tpp, tmp_path, capsys):
        out = tmp_path / "p.csv"
        run(capsys, *tpp_flags(tpp, extra=("--out", str(out))))
        _, data = read_csv(out)
        assert np.all(data[:, 4] >= 0.5 - 1e-9)
        assert np.all(data[:, 4] <= 1.0 + 1e-9)

    def test_byte_identical_reruns(self, tpp, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        noise = ("--noise", "0.01", "--seed", "7")
        run(capsys, *tpp_flags(tpp, extra=(*noise, "--out", str(a))))
        run(capsys, *tpp_flags(tpp, extra=(*noise, "--out", str(b))))
        assert a.read_bytes() == b.read_bytes()

    def test_zero_decay_ode_keeps_unit_envelope(self, tpp, tmp_path, capsys):
        out = tmp_path / "coh.csv"
        code, _, _ = run(
            capsys,
            "simulate",
            "--model",
            "ode-bloch",
            "--rabi-hz",
            repr(tpp.rabi_hz),
            "--t-max",
            "200e-6",
            "--samples",
            "51",
            "--out",
            str(out),
        )
        assert code == EXIT_OK
        _, data = read_csv(out)
        norms = np.sqrt(np.sum(data[:, 1:4] ** 2, axis=1))
        np.testing.assert_allclose(norms, 1.0, atol=1e-7)

    def test_density_model_matches_analytic_rows(self, tpp, tmp_path, capsys):
        shared = dict(samples=101, t_start=1e-9)
        a, b = tmp_path / "an.csv", tmp_path / "ode.csv"
        run(capsys, *tpp_flags(tpp, model="analytic", **shared, extra=("--out", str(a))))
        code, _, _ = run(
            capsys, *tpp_flags(tpp, model="ode-density", **shared, extra=("--out", str(b)))
        )
        assert code == EXIT_OK
        _, da = read_csv(a)
        _, db = read_csv(b)
        assert np.max(np.abs(da - db)) <= 1e-6

    def test_json_format_records_seed(self, tpp, tmp_path, capsys):
        out = tmp_path / "sim.json"
        run(
            capsys,
            *tpp_flags(
                tpp,
                samples=31,
                extra=("--noise", "0.01", "--seed", "3", "--format", "json", "--out", str(out)),
            ),
        )
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == "1"
        assert payload["seed"] == 3
        assert len(payload["t"]) == 31

    def test_noise_without_seed_is_usage_error(self, tpp, capsys):
        code, _, err = run(capsys, *tpp_flags(tpp, extra=("--noise", "0.01")))
        assert code == EXIT_USAGE
        assert "seed" in err

    def test_missing_field_flags_is_usage_error(self, capsys):
        code, _, _ = run(capsys, "simulate", "--t-max", "1e-3")
        assert code == EXIT_USAGE

    def test_ode_with_decay_rejects_zero_start(self, tpp, capsys):
        code, _, err = run(capsys, *tpp_flags(tpp, model="ode-bloch", t_start=0.0))
        assert code == EXIT_USAGE
        assert "t-start" in err or "t = 0" in err

    def test_sample_count_must_be_at_least_two(self, tpp, capsys):
        code, _, err = run(capsys, *tpp_flags(tpp, samples=1))
        assert code == EXIT_USAGE
        assert "samples" in err

    def test_t_max_must_exceed_start(self, tpp, capsys):
        flags = tpp_flags(tpp)
        flags[flags.index("--t-max") + 1] = "-1.0"
        code, _, err = run(capsys, *flags)
        assert code == EXIT_USAGE
        assert "t-max" in err

    def test_unknown_format_rejected(self, tpp, capsys):
        code, _, _ = run(capsys, *tpp_flags(tpp, extra=("--format", "xml")))
        assert code == EXIT_USAGE


class TestFit:
    def test_round_trip_recovers_parameters(self, tpp, tmp_path, capsys):
        csv_path = tmp_path / "rec.csv"
        run(capsys, *tpp_flags(tpp, extra=("--out", str(csv_path))))
        code, out, _ = run(capsys, "fit", str(csv_path))
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["schema_version"] == "1"
        assert payload["converged"] is True
        assert payload["delta"] == pytest.approx(tpp.decay.delta, rel=1e-6)
        assert payload["mu"] == pytest.approx(tpp.decay.mu, rel=1e-6)
        assert payload["nu"] == pytest.approx(tpp.decay.nu, rel=1e-6)
        assert payload["omega1"] == pytest.approx(tpp.omega1, rel=1e-6)
        assert payload["my_rms"] <= 1e-12
        assert set(payload["stderr"]) == {"delta", "mu", "nu", "omega1"}

    def test_empty_file_is_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        code, _, err = run(capsys, "fit", str(bad))
        assert code == EXIT_USAGE
        assert "header" in err

    def test_missing_file_is_io_error(self, tmp_path, capsys):
        code, _, _ = run(capsys, "fit", str(tmp_path / "nope.csv"))
        assert code == EXIT_USAGE

    def test_bad_row_reports_line_number(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,mx,my,mz\n0.0,0.0,0.0,1.0\n1.0,oops,0.0,1.0\n")
        code, _, err = run(capsys, "fit", str(bad))
        assert code == EXIT_USAGE
        assert ":3:" in err

    def test_flat_record_is_numerical_failure(self, tmp_path, capsys):
        flat = tmp_path / "flat.csv"
        rows = "\n".join(f"{i * 1e-6!r},0.0,0.0,0.0" for i in range(32))
        flat.write_text("t,mx,my,mz\n" + rows + "\n")
        code, _, err = run(capsys, "fit", str(flat))
        assert code == EXIT_NUMERICAL
        assert "flat" in err

    def test_noisy_file_with_seed_echo(self, tpp, tmp_path, capsys):
        csv_path = tmp_path / "noisy.csv"
        run(capsys, *tpp_flags(tpp, extra=("--noise", "0.01", "--seed", "5", "--out", str(csv_path))))
        code, out, _ = run(capsys, "fit", str(csv_path), "--fix-ratio", "11.5", "--seed", "5")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["seed"] == 5
        assert payload["fixed_delta_mu_ratio"] == 11.5
        assert payload["nu"] == pytest.approx(tpp.decay.nu, rel=0.4)


class TestCompare:
    def test_file_against_itself_is_exact(self, tpp, tmp_path, capsys):
        csv_path = tmp_path / "self.csv"
        run(capsys, *tpp_flags(tpp, samples=51, extra=("--out", str(csv_path))))
        code, out, _ = run(capsys, "compare", "--a", str(csv_path), "--b", str(csv_path), "--json")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["overall"] == 0.0
        assert payload["min_fidelity"] == pytest.approx(1.0, abs=1e-12)

    def test_analytic_versus_ode(self, tpp, capsys):
        code, out, _ = run(
            capsys,
            "compare",
            "--a",
            "analytic",
            "--b",
            "ode-bloch",
            "--rabi-hz",
            repr(tpp.rabi_hz),
            "--mu",
            repr(tpp.decay.mu),
            "--delta-mu-ratio",
            "11.5",
            "--nu",
            repr(tpp.decay.nu),
            "--t-max",
            "500e-6",
            "--samples",
            "101",
            "--json",
        )
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["overall"] <= 1e-6
        assert payload["min_fidelity"] >= 1.0 - 1e-9

    def test_noisy_file_reports_fidelity_dip(self, tpp, tmp_path, capsys):
        noisy = tmp_path / "noisy.csv"
        run(capsys, *tpp_flags(tpp, extra=("--noise", "0.01", "--seed", "11", "--out", str(noisy))))
        code, out, _ = run(
            capsys,
            "compare",
            "--a",
            "analytic",
            "--b",
            str(noisy),
            "--rabi-hz",
            repr(tpp.rabi_hz),
            "--mu",
            repr(tpp.decay.mu),
            "--delta-mu-ratio",
            "11.5",
            "--nu",
            repr(tpp.decay.nu),
            "--json",
        )
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["min_fidelity"] < 1.0 - 1e-9
        assert 0.0 <= payload["min_fidelity_time"] <= 500e-6

    def test_grid_mismatch_is_numerical_failure(self, tpp, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, *tpp_flags(tpp, samples=51, extra=("--out", str(a))))
        run(capsys, *tpp_flags(tpp, samples=61, extra=("--out", str(b))))
        code, _, err = run(capsys, "compare", "--a", str(a), "--b", str(b))
        assert code == EXIT_NUMERICAL
        assert "mismatch" in err

    def test_human_readable_output(self, tpp, tmp_path, capsys):
        csv_path = tmp_path / "h.csv"
        run(capsys, *tpp_flags(tpp, samples=51, extra=("--out", str(csv_path))))
        code, out, _ = run(capsys, "compare", "--a", str(csv_path), "--b", str(csv_path))
        assert code == EXIT_OK
        assert "min fidelity" in out


class TestThermal:
    def test_reference_values(self, capsys):
        code, out, _ = run(capsys, "thermal", "--larmor-hz", "161.973e6", "--temperature", "297.15")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["epsilon_high_t"] == pytest.approx(1.304e-5, rel=5e-3)
        assert abs(payload["epsilon_high_t"] / payload["epsilon_exact"] - 1.0) <= 1e-10
        assert payload["partition_function"] == pytest.approx(2.0, abs=1e-9)
        eig = payload["eigenvalues"]
        assert eig[0] + eig[1] == pytest.approx(1.0, abs=1e-15)
        assert eig[0] - eig[1] == pytest.approx(payload["epsilon_exact"], rel=1e-12)

    def test_nonpositive_inputs_rejected(self, capsys):
        code, _, _ = run(capsys, "thermal", "--larmor-hz", "-5.0")
        assert code == EXIT_USAGE
        code, _, _ = run(capsys, "thermal", "--larmor-hz", "1e6", "--temperature", "0.0")
        assert code == EXIT_USAGE


class TestEntryPoints:
    def test_unknown_command_is_usage_error(self, capsys):
        assert run(capsys, "frobnicate")[0] == EXIT_USAGE

    def test_help_exits_cleanly(self, capsys):
        assert run(capsys, "--help")[0] == EXIT_OK

    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "nhbloch.cli", "thermal", "--larmor-hz", "1e6"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["schema_version"] == "1"
