import csv
import io
import math
import time

import numpy as np
import pytest

from mazer import MazerParams, emission_probability
from mazer.cli import main, number
from mazer.sweep import PRESETS, SweepSpec, compare, preset, run_sweep


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestNumbers:
    @pytest.mark.parametrize("text, value", [
        ("pi", math.pi), ("10pi", 10 * math.pi), ("-2.5pi", -2.5 * math.pi), ("0.5*pi", 0.5 * math.pi),
        ("-pi", -math.pi), ("1e-3", 1e-3), ("3", 3.0),
    ])
    def test_parse(self, text, value):
        assert number(text) == pytest.approx(value, rel=1e-15)

    def test_reject(self):
        with pytest.raises(Exception):
            number("tenpi")


class TestSweep:
    def test_single_point_matches_direct_call(self, capsys):
        code, out, _ = run(capsys, "sweep", "--axis", "kappa_L", "--min", "1", "--max", "10pi", "--steps", "4",
                           "--n", "1", "--k-over-kappa", "0.4", "--delta-over-g", "-0.3")
        assert code == 0
        for r, L in zip(rows(out), np.linspace(1.0, 10 * math.pi, 4)):
            p = MazerParams(1, 0.4, -0.3, L)
            assert float(r["p_em"]) == pytest.approx(emission_probability(p), abs=5e-12)
            total = sum(float(r[c]) for c in ("r_a", "t_a", "r_b", "t_b"))
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_format(self, capsys):
        code, out, _ = run(capsys, "sweep", "--preset", "fig3", "--steps", "5")
        lines = out.split("\n")
        assert lines[0].startswith("# mazer ") and lines[1].startswith("# spec {")
        assert lines[2] == "n,k_over_kappa,delta_over_g,kappa_L,r_a,t_a,r_b,t_b,p_em,error"
        assert "\r" not in out and out.endswith("\n")
        assert len(rows(out)) == 10

    def test_fig3_blocked_region(self):
        text, failed = run_sweep(preset("fig3"))
        assert failed == 0
        data = rows(text)
        assert len(data) == 2000
        for r in data:
            k, d = float(r["k_over_kappa"]), float(r["delta_over_g"])
            if d == 0.5 and k < math.sqrt(0.5):
                assert r["p_em"] == "0"

    def test_fig6_is_peaked(self):
        text, _ = run_sweep(preset("fig6"))
        p = np.array([float(r["p_em"]) for r in rows(text) if r["delta_over_g"] == "0"])
        assert p.max() > 0.45 and p.min() < 0.05

    def test_explicit_flag_overrides_preset_curves(self, capsys):
        code, out, _ = run(capsys, "sweep", "--preset", "fig6", "--delta-over-g", "-0.2", "--steps", "11")
        assert code == 0
        data = rows(out)
        assert len(data) == 11 and {r["delta_over_g"] for r in data} == {"-0.2"}

    def test_two_axes(self, capsys):
        code, out, _ = run(capsys, "sweep", "--axis", "delta_over_g,kappa_L", "--min=-1,0", "--max", "0,5",
                           "--steps", "3,4", "--k-over-kappa", "0.3")
        assert code == 0
        data = rows(out)
        assert [(r["delta_over_g"], r["kappa_L"]) for r in data[:5]] == [
            ("-1", "0"), ("-1", "1.66666666667"), ("-1", "3.33333333333"), ("-1", "5"), ("-0.5", "0")]

    def test_oracle_with_file_profile(self, tmp_path, capsys):
        path = tmp_path / "mode.txt"
        path.write_text("# mesa written out\n0 1\n0.5 1\n")
        code, out, _ = run(capsys, "sweep", "--engine", "oracle", "--profile", f"file:{path}", "--slices", "4",
                           "--axis", "kappa_L", "--min", "1", "--max", "5", "--steps", "3",
                           "--k-over-kappa", "0.3", "--delta-over-g", "-0.2")
        assert code == 0
        for r in rows(out):
            p = MazerParams(0, 0.3, -0.2, float(r["kappa_L"]))
            assert float(r["p_em"]) == pytest.approx(emission_probability(p), abs=1e-10)

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "out.csv"
        assert main(["sweep", "--preset", "fig4", "--steps", "3", "--out", str(path)]) == 0
        assert capsys.readouterr().out == ""
        assert len(rows(path.read_text())) == 3

    def test_parallel_matches_serial(self):
        spec = SweepSpec(axes=("kappa_L",), ranges=((1.0, 10.0, 8),), engine="oracle", profile="sech2",
                         fixed=dict(n=0, k_over_kappa=0.3, delta_over_g=-0.1), slices=32)
        assert run_sweep(spec, jobs=2) == run_sweep(spec, jobs=1)

    def test_peakamp_has_amplitude(self):
        text, _ = run_sweep(preset("peakamp"))
        data = rows(text)
        assert "amplitude" in data[0]
        at_res = [r for r in data if r["delta_over_g"] == "0" and r["k_over_kappa"] == "0.1"]
        assert float(at_res[0]["amplitude"]) == 0.5
        assert float(at_res[0]["p_em"]) == pytest.approx(0.5, abs=0.02)


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ["sweep", "--axis", "foo", "--min", "0", "--max", "1", "--steps", "3"],
        ["sweep", "--axis", "kappa_L", "--min", "1", "--max", "0", "--steps", "3"],
        ["sweep", "--axis", "kappa_L", "--min", "0", "--max", "1", "--steps", "1"],
        ["sweep", "--axis", "kappa_L", "--min", "0", "--max", "1"],
        ["sweep"],
        ["compare", "--preset", "fig3", "--engine", "closed_form"],
        ["sweep", "--preset", "fig6", "--k-over-kappa", "-1"],
        ["sweep", "--engine", "oracle", "--profile", "file:/nonexistent", "--preset", "fig6"],
    ])
    def test_invalid_arguments(self, argv, capsys):
        assert main(argv) == 2

    def test_argparse_errors(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--preset", "nope"])
        assert exc.value.code == 2

    def test_numerical_failure_fraction(self, capsys):
        # every point of this grid has k_plus = 0 exactly, a guarded pole
        code, _, err = run(capsys, "sweep", "--axis", "kappa_L", "--min", "1", "--max", "2", "--steps", "3",
                           "--k-over-kappa", "1", "--delta-over-g", "0")
        assert code == 3
        assert "failed" in err


class TestCompare:
    def test_closed_form_vs_oracle(self):
        spec = SweepSpec(axes=("k_over_kappa", "kappa_L"), ranges=((0.05, 3.0, 15), (0.0, 40.0, 15)),
                         fixed=dict(n=1, delta_over_g=-0.7))
        text, summary, failed = compare(["closed_form", "oracle"], spec)
        assert failed == 0
        assert summary.max_dev[0] < 1e-10 and summary.max_amp_dev[0] < 1e-10
        assert "# summary closed_form vs oracle" in text

    def test_closed_form_vs_rabi_hot(self):
        spec = SweepSpec(axes=("kappa_L",), ranges=((math.pi, 100 * math.pi, 200),),
                         fixed=dict(n=0, k_over_kappa=100.0), curves=[dict(delta_over_g=d) for d in (0, 1, -1)])
        _, summary, _ = compare(["closed_form", "rabi"], spec)
        assert summary.max_dev[0] < 1e-3

    def test_cli_compare(self, capsys):
        code, out, err = run(capsys, "compare", "--preset", "fig3", "--steps", "20",
                             "--engine", "closed_form", "--engine", "oracle")
        assert code == 0
        assert "p_em_closed_form" in out.splitlines()[2] and "dev_closed_form_oracle" in out
        assert "max_dev" in err


class TestPeaksCommand:
    def test_table(self, capsys):
        code, out, _ = run(capsys, "peaks", "--k-over-kappa", "0.1", "--delta-over-g", "0", "--m-max", "3")
        assert code == 0
        data = rows(out)
        assert [float(r["predicted_kappa_L"]) for r in data] == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi])
        for r in data:
            assert float(r["located_p_em"]) == pytest.approx(0.5, abs=0.02)

    def test_missing_momentum(self, capsys):
        assert main(["peaks", "--delta-over-g", "0"]) == 2


@pytest.mark.parametrize("name", PRESETS)
def test_preset_deterministic_and_fast(name):
    t0 = time.perf_counter()
    a, _ = run_sweep(preset(name))
    elapsed = time.perf_counter() - t0
    b, _ = run_sweep(preset(name))
    assert a == b
    assert elapsed < 60.0
