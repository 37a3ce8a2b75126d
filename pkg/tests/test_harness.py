import json

import numpy as np
import pytest

from sp8d import cli, harness
from sp8d.demap import NonlinearFormatError
from sp8d.harness import ConfigError, SimConfig, SimResult


class TestGmiEstimator:
    def test_perfect_llrs_saturate(self, rng):
        bits = rng.integers(0, 2, size=(500, 6), dtype=np.uint8)
        llrs = (1.0 - 2.0 * bits) * 200.0  # clamped to +-50 internally
        assert harness.gmi_from_llrs(llrs, bits) == pytest.approx(6.0, abs=1e-9)

    def test_zero_llrs_give_zero(self, rng):
        bits = rng.integers(0, 2, size=(500, 6), dtype=np.uint8)
        assert harness.gmi_from_llrs(np.zeros((500, 6)), bits) == 0.0

    def test_adversarial_llrs_clamp_at_zero(self, rng):
        bits = rng.integers(0, 2, size=(500, 4), dtype=np.uint8)
        llrs = -(1.0 - 2.0 * bits) * 10.0  # systematically wrong signs
        assert harness.gmi_from_llrs(llrs, bits) == 0.0

    def test_crossing_interpolation(self):
        rows = [SimResult(snr_db=1.0, frames=1, gmi_bits=4.0),
                SimResult(snr_db=2.0, frames=1, gmi_bits=6.0)]
        assert harness.gmi_crossing(rows, 5.0) == pytest.approx(1.5)

    def test_crossing_requires_bracket(self):
        rows = [SimResult(snr_db=1.0, frames=1, gmi_bits=4.0)]
        with pytest.raises(ValueError):
            harness.gmi_crossing(rows, 5.0)


class TestEmit:
    def _rows(self):
        return [
            SimResult(snr_db=4.0, frames=10, prefec_ber=0.1, postfec_ber=0.01,
                      gmi_bits=4.5, mean_iters=3.25, ops_logical=448, ops_add=9,
                      ops_cmp_min=63, ops_cmp_max=67),
            SimResult(snr_db=4.5, frames=20, prefec_ber=0.05, postfec_ber=None,
                      gmi_bits=None, mean_iters=None, ops_logical=None,
                      ops_add=None, ops_cmp_min=None, ops_cmp_max=None),
        ]

    def test_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        harness.emit_results([], str(path), "csv")
        assert path.read_text() == ",".join(harness.CSV_COLUMNS) + "\n"

    def test_one_row_two_lines(self, tmp_path):
        path = tmp_path / "one.csv"
        harness.emit_results(self._rows()[:1], str(path), "csv")
        assert len(path.read_text().splitlines()) == 2

    def test_round_trip(self, tmp_path):
        path = tmp_path / "rows.csv"
        rows = self._rows()
        harness.emit_results(rows, str(path), "csv")
        assert harness.parse_results(str(path)) == rows

    def test_json_mirrors_fields(self, tmp_path):
        path = tmp_path / "rows.json"
        rows = self._rows()
        harness.emit_results(rows, str(path), "json")
        data = json.loads(path.read_text())
        assert data[0]["snr_db"] == 4.0 and data[0]["ops_add"] == 9
        assert data[1]["postfec_ber"] is None


class TestConfig:
    def test_bad_step(self):
        with pytest.raises(ConfigError):
            harness.run_gmi_sweep(SimConfig(snr_step=0.0, frames=10))

    def test_bad_demapper(self):
        with pytest.raises(ConfigError):
            harness.run_gmi_sweep(SimConfig(demapper="bogus"))

    def test_p_out_of_range(self):
        with pytest.raises(ConfigError):
            harness.run_gmi_sweep(SimConfig(demapper="posd", p=9, frames=10))

    def test_ms_on_nonlinear_format(self):
        with pytest.raises(NonlinearFormatError):
            harness.run_gmi_sweep(SimConfig(format="pb6b8d", demapper="ms", frames=10))

    def test_unknown_format(self):
        with pytest.raises(ConfigError):
            harness.run_gmi_sweep(SimConfig(format="missing", frames=10))

    def test_ldpc_source_parsing(self):
        src = harness.parse_ldpc_source("builtin:n=96,rate=0.5,seed=3")
        assert src == {"kind": "builtin", "n": 96, "rate": 0.5, "seed": 3}
        assert harness.parse_ldpc_source("alist:/tmp/h.alist")["path"] == "/tmp/h.alist"
        with pytest.raises(ConfigError):
            harness.parse_ldpc_source("builtin:q=1")


class TestSweeps:
    def test_high_snr_postfec_zero(self):
        cfg = SimConfig(format="pb6b8d", demapper="mlm", snr_start=14.0, snr_stop=14.0,
                        snr_step=1.0, target_errors=50, max_frames=64, seed=2,
                        ldpc="builtin:n=96,rate=0.5,seed=7")
        rows = harness.run_ber_sweep(cfg)
        assert rows[0].postfec_ber == 0.0
        assert rows[0].prefec_ber == 0.0

    def test_rows_sorted_by_snr(self):
        cfg = SimConfig(format="pb6b8d", demapper="1d", snr_start=2.0, snr_stop=4.0,
                        snr_step=1.0, frames=2000, seed=2)
        rows = harness.run_gmi_sweep(cfg)
        assert [r.snr_db for r in rows] == [2.0, 3.0, 4.0]

    def test_gmi_monotone_in_snr(self):
        cfg = SimConfig(format="pb6b8d", demapper="mlm", snr_start=1.0, snr_stop=9.0,
                        snr_step=2.0, frames=20_000, seed=4)
        gmi = [r.gmi_bits for r in harness.run_gmi_sweep(cfg)]
        assert all(b >= a - 0.02 for a, b in zip(gmi, gmi[1:]))

    @pytest.mark.parametrize("fmt,snr", [
        ("pb4b8d", 3.0), ("pb5b8d", 3.5), ("pb6b8d", 4.0), ("pa7b8d", 4.5),
    ])
    def test_demapper_ordering_at_fixed_snr(self, fmt, snr):
        # GMI(mlm) >= GMI(posd p) >= GMI(posd p-1) >= GMI(1d) within MC noise.
        from sp8d import beq
        spec = beq.load_format(fmt)
        p = beq.recommended_lrp_count(spec)
        values = {}
        for dem, pp in [("mlm", None), ("posd", p), ("posd", p - 1), ("1d", None)]:
            cfg = SimConfig(format=fmt, demapper=dem, p=pp, snr_start=snr,
                            snr_stop=snr, snr_step=1.0, frames=20_000, seed=6)
            values[(dem, pp)] = harness.run_gmi_sweep(cfg)[0].gmi_bits
        slack = 3 * 0.5 / np.sqrt(20_000)
        assert values[("mlm", None)] >= values[("posd", p)] - slack
        assert values[("posd", p)] >= values[("posd", p - 1)] - slack
        assert values[("posd", p - 1)] >= values[("1d", None)] - slack

    def test_postfec_ber_monotone_in_snr(self):
        cfg = SimConfig(format="pb6b8d", demapper="mlm", snr_start=4.0, snr_stop=5.0,
                        snr_step=0.5, target_errors=50, max_frames=500, seed=8)
        rows = harness.run_ber_sweep(cfg)
        bers = [r.postfec_ber for r in rows]
        # Statistical tolerance: allow equality and tiny inversions near zero.
        assert all(b <= a * 1.5 + 2e-5 for a, b in zip(bers, bers[1:]))

    def test_alist_ldpc_source(self, tmp_path):
        from sp8d import fec
        code = fec.make_regular_code(96, 0.5, 7)
        path = tmp_path / "small.alist"
        path.write_text(fec.dump_alist(code))
        cfg = SimConfig(format="pb6b8d", demapper="mlm", snr_start=12.0, snr_stop=12.0,
                        snr_step=1.0, target_errors=10, max_frames=16, seed=3,
                        ldpc=f"alist:{path}")
        row = harness.run_ber_sweep(cfg)[0]
        assert row.postfec_ber == 0.0

    def test_ber_row_population(self):
        cfg = SimConfig(format="pb4b8d", demapper="ms", snr_start=6.0, snr_stop=6.0,
                        snr_step=1.0, target_errors=20, max_frames=64, seed=3,
                        ldpc="builtin:n=96,rate=0.5,seed=7")
        row = harness.run_ber_sweep(cfg)[0]
        assert row.frames > 0 and row.mean_iters is not None
        assert row.gmi_bits is not None and row.ops_add is not None


class TestReproducibility:
    def test_gmi_rows_worker_invariant(self):
        base = dict(format="pb6b8d", demapper="posd", p=4, snr_start=4.0,
                    snr_stop=4.5, snr_step=0.5, frames=12_000, seed=11)
        rows1 = harness.run_gmi_sweep(SimConfig(**base, workers=1))
        rows2 = harness.run_gmi_sweep(SimConfig(**base, workers=2))
        assert rows1 == rows2

    def test_sim_csv_byte_identical(self, tmp_path):
        base = dict(format="pb6b8d", demapper="mlm", snr_start=4.0, snr_stop=4.6,
                    snr_step=0.3, target_errors=30, max_frames=300, seed=5,
                    ldpc="builtin:n=1800,rate=0.8333,seed=1")
        paths = []
        for workers in (1, 3):
            rows = harness.run_ber_sweep(SimConfig(**base, workers=workers))
            path = tmp_path / f"w{workers}.csv"
            harness.emit_results(rows, str(path), "csv")
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestComplexityReport:
    def test_inapplicable_pairs_marked(self):
        rows = harness.run_complexity_report(["pb6b8d"], ["ms"], frames=10)
        assert rows[0].applicable is False and rows[0].ops_add is None

    def test_applicable_counts(self):
        rows = harness.run_complexity_report(["pb6b8d"], ["posd", "mlm"], frames=500)
        posd = next(r for r in rows if r.demapper == "posd")
        mlm = next(r for r in rows if r.demapper == "mlm")
        assert posd.ops_add == 9 and posd.p == 4
        assert mlm.ops_add == 2694
        assert mlm.ops_add / posd.ops_add >= 100

    def test_csv_marks_inapplicable(self, tmp_path):
        rows = harness.run_complexity_report(["pb6b8d"], ["ms", "posd"], frames=10)
        path = tmp_path / "complexity.csv"
        harness.emit_complexity(rows, str(path))
        text = path.read_text()
        assert ",x,x,x,x" in text


class TestCli:
    def test_codebook_dump(self, tmp_path):
        out = tmp_path / "book.csv"
        assert cli.main(["codebook", "--format", "pb6b8d", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 64 + 1
        assert lines[-1].startswith("# min_squared_distance")

    def test_gmi_subcommand(self, tmp_path):
        out = tmp_path / "g.csv"
        code = cli.main(["gmi", "--format", "pb6b8d", "--demapper", "1d",
                         "--snr", "4:5:0.5", "--frames", "2000",
                         "--seed", "1", "--out", str(out)])
        assert code == 0
        assert len(harness.parse_results(str(out))) == 3

    def test_sim_subcommand_json(self, tmp_path):
        out = tmp_path / "s.json"
        code = cli.main(["sim", "--format", "pb4b8d", "--demapper", "ms",
                         "--snr", "8:8:1", "--ldpc", "builtin:n=96,rate=0.5,seed=7",
                         "--target-errors", "10", "--max-frames", "32",
                         "--seed", "1", "--out", str(out), "--json"])
        assert code == 0
        assert isinstance(json.loads(out.read_text()), list)

    def test_exit_code_inapplicable(self, tmp_path):
        code = cli.main(["sim", "--format", "pb6b8d", "--demapper", "ms",
                         "--snr", "4:5:1", "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_exit_code_config_error(self, tmp_path):
        assert cli.main(["sim", "--format", "nope", "--demapper", "mlm",
                         "--snr", "4:5:1", "--out", str(tmp_path / "x.csv")]) == 1
        assert cli.main(["gmi", "--format", "pb6b8d", "--demapper", "mlm",
                         "--snr", "bad", "--out", str(tmp_path / "x.csv")]) == 1
        assert cli.main(["sim", "--format", "pb6b8d"]) == 1  # argparse usage error

    def test_exit_code_io_error(self):
        assert cli.main(["codebook", "--format", "pb6b8d",
                         "--out", "/nonexistent-dir/x.csv"]) == 3
