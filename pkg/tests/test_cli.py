"""Config parsing, file formats, and the command-line entry point."""

import hashlib
import json
import math

import numpy as np
import pytest

from lzs_sim import (
    DriveParams,
    ParseError,
    PopulationMap,
    QubitModel,
    SweepGrid,
    ValidationError,
    lzs_rate,
    run_sweep,
    stationary_three_state,
)
from lzs_sim.cli import (
    csv_bytes,
    main,
    parse_config,
    pgm_bytes,
    read_csv,
    read_pgm,
    run,
    write_csv,
    write_pgm,
)

MINIMAL = """\
[model]
left_levels = 0.0
right_levels = 0.0
crossing 0 0 = 0.05
interwell L0 R0 = 0.01

[drive]
frequency = 1.0
dephasing = 0.1

[grid]
eps = -1 1 3
amp = 0 1 2
"""

THREE_STATE = """\
[model]
left_levels = 0.0
right_levels = 0.0 6.0
crossing 0 0 = 0.03
crossing 0 1 = 0.3
relax R 1 0 = 1.0
interwell L0 R0 = 0.005

[drive]
frequency = 1.0
dephasing = 0.1

[grid]
eps = -3 3 5
amp = 0 4 3
"""


class TestParseConfig:
    def test_minimal(self):
        cfg = parse_config(MINIMAL)
        assert cfg.model.n_left == 1 and cfg.model.n_right == 1
        assert cfg.drives[0].frequency == 1.0
        assert cfg.grid.shape == (2, 3)
        assert cfg.output_dir == "out"
        assert cfg.formats == ("csv", "pgm")
        assert cfg.config_sha256 == hashlib.sha256(MINIMAL.encode()).hexdigest()

    def test_comments_and_blank_lines_ignored(self):
        text = MINIMAL.replace(
            "[model]", "# leading comment\n\n[model]  # trailing"
        )
        cfg = parse_config(text)
        assert cfg.model.n_left == 1

    def test_three_state_structure(self):
        cfg = parse_config(THREE_STATE)
        assert cfg.model.crossings[0, 1] == 0.3
        assert cfg.model.right_relax[1, 0] == 1.0
        assert cfg.model.left_to_right[0, 0] == 0.005

    def test_frequency_batch(self):
        text = MINIMAL.replace(
            "frequency = 1.0", "frequencies = 5 8 11 13 15 17"
        )
        cfg = parse_config(text)
        assert [d.frequency for d in cfg.drives] == [5, 8, 11, 13, 15, 17]

    def test_leak_section(self):
        text = MINIMAL.replace(
            "interwell L0 R0 = 0.01",
            "interwell L0 R0 = 0.01\nleak_threshold = 1\nleak_return = 0.5",
        )
        cfg = parse_config(text)
        assert cfg.model.leak.threshold == 1
        assert cfg.model.leak.return_rate == 0.5

    def test_kernel_and_output_sections(self):
        text = MINIMAL + "\n[kernel]\nn_margin = 10\nlorentz_cutoff = 30\n"
        text += "\n[output]\ndirectory = maps\nformats = csv\n"
        cfg = parse_config(text)
        assert cfg.kernel.n_margin == 10
        assert cfg.kernel.lorentz_cutoff == 30.0
        assert cfg.output_dir == "maps"
        assert cfg.formats == ("csv",)

    def test_unknown_section(self):
        with pytest.raises(ParseError, match=r"line 1, column 1"):
            parse_config("[nonsense]\n")

    def test_unknown_key_with_position(self):
        text = MINIMAL.replace("dephasing = 0.1", "dephasing = 0.1\nphase = 3")
        with pytest.raises(ParseError, match=r"line 10, column 1.*unknown key"):
            parse_config(text)

    def test_bad_number_reports_column(self):
        text = MINIMAL.replace("dephasing = 0.1", "dephasing = abc")
        with pytest.raises(ParseError, match=r"column 13.*got 'abc'"):
            parse_config(text)

    def test_duplicate_key(self):
        text = MINIMAL.replace(
            "frequency = 1.0", "frequency = 1.0\nfrequency = 2.0"
        )
        with pytest.raises(ParseError, match="duplicate key"):
            parse_config(text)

    def test_missing_equals(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_config("[model]\nleft_levels 0.0\n")

    def test_key_outside_section(self):
        with pytest.raises(ParseError, match="outside"):
            parse_config("frequency = 1.0\n")

    def test_negative_dephasing_names_invariant(self):
        text = MINIMAL.replace("dephasing = 0.1", "dephasing = -0.1")
        with pytest.raises(ValidationError, match="dephasing must be positive"):
            parse_config(text)

    def test_both_frequency_forms_rejected(self):
        text = MINIMAL.replace(
            "frequency = 1.0", "frequency = 1.0\nfrequencies = 2 3"
        )
        with pytest.raises(ValidationError, match="exactly one"):
            parse_config(text)

    def test_missing_required_key(self):
        with pytest.raises(ValidationError, match=r"\[grid\] amp is required"):
            parse_config(MINIMAL.replace("amp = 0 1 2", ""))

    def test_crossing_out_of_range(self):
        text = MINIMAL.replace("crossing 0 0 = 0.05", "crossing 0 2 = 0.05")
        with pytest.raises(ValidationError, match="out of range"):
            parse_config(text)

    def test_uphill_relax_rejected(self):
        text = THREE_STATE.replace("relax R 1 0 = 1.0", "relax R 0 1 = 1.0")
        with pytest.raises(ValidationError, match="lower triangular"):
            parse_config(text)

    def test_leak_requires_both_keys(self):
        text = MINIMAL.replace(
            "interwell L0 R0 = 0.01", "interwell L0 R0 = 0.01\nleak_return = 1.0"
        )
        with pytest.raises(ValidationError, match="together"):
            parse_config(text)

    def test_interwell_same_well_rejected(self):
        text = THREE_STATE.replace(
            "interwell L0 R0 = 0.005", "interwell R0 R1 = 0.005"
        )
        with pytest.raises(ValidationError, match="opposite wells"):
            parse_config(text)


def small_map():
    model = QubitModel(
        left_offsets=(0.0,),
        right_offsets=(0.0,),
        crossings=np.array([[0.05]]),
        left_to_right=np.array([[0.01]]),
    )
    drive = DriveParams(amplitude=0.0, frequency=1.0, dephasing=0.1)
    return run_sweep(model, drive, SweepGrid(-1.0, 1.0, 5, 0.0, 2.0, 3))


class TestCsvFormat:
    def test_header_and_row_count(self):
        pmap = small_map()
        text = csv_bytes(pmap).decode()
        lines = text.strip().split("\n")
        assert lines[0] == "eps_ghz,amp_ghz,p_left"
        assert len(lines) == 1 + 15

    def test_row_major_over_amplitude_then_detuning(self):
        pmap = small_map()
        lines = csv_bytes(pmap).decode().strip().split("\n")[1:]
        first = [line.split(",") for line in lines[:5]]
        assert all(row[1] == "0" for row in first)
        assert [row[0] for row in first] == ["-1", "-0.5", "0", "0.5", "1"]

    def test_seventeen_digit_round_trip(self, tmp_path):
        pmap = small_map()
        path = tmp_path / "map.csv"
        write_csv(path, pmap)
        eps, amp, values = read_csv(path)
        assert np.array_equal(eps, pmap.grid.eps_values)
        assert np.array_equal(amp, pmap.grid.amp_values)
        assert np.array_equal(values, pmap.values)

    def test_checksum_matches_bytes(self, tmp_path):
        pmap = small_map()
        path = tmp_path / "map.csv"
        digest = write_csv(path, pmap)
        assert digest == hashlib.sha256(path.read_bytes()).hexdigest()


class TestPgmFormat:
    def test_header_and_size(self):
        pmap = small_map()
        blob = pgm_bytes(pmap)
        assert blob.startswith(b"P5\n5 3\n255\n")
        assert len(blob) == len(b"P5\n5 3\n255\n") + 15

    def test_quantization_rule(self, tmp_path):
        pmap = small_map()
        path = tmp_path / "map.pgm"
        write_pgm(path, pmap)
        raster = read_pgm(path)
        expected = np.floor(pmap.values * 255.0 + 0.5).astype(np.uint8)
        assert np.array_equal(raster, expected[::-1])

    def test_amplitude_increases_upward(self, tmp_path):
        pmap = small_map()
        path = tmp_path / "map.pgm"
        write_pgm(path, pmap)
        raster = read_pgm(path)
        top = np.floor(pmap.values[-1] * 255.0 + 0.5).astype(np.uint8)
        assert np.array_equal(raster[0], top)

    def test_extremes_map_to_black_and_white(self):
        pmap = PopulationMap(
            grid=SweepGrid(0.0, 1.0, 2, 0.0, 1.0, 2),
            values=np.array([[0.0, 1.0], [0.5, 0.25]]),
            frequency=1.0,
            fingerprint="synthetic",
        )
        blob = pgm_bytes(pmap)
        raster = np.frombuffer(blob[len(b"P5\n2 2\n255\n") :], dtype=np.uint8)
        assert list(raster) == [128, 64, 0, 255]


class TestRunCommand:
    def test_writes_all_artifacts(self, tmp_path):
        cfg = parse_config(MINIMAL)
        assert run(cfg, out_dir=tmp_path / "out") == 0
        names = sorted(p.name for p in (tmp_path / "out").iterdir())
        assert names == ["manifest.json", "map_00.csv", "map_00.pgm"]

    def test_manifest_contents(self, tmp_path):
        cfg = parse_config(THREE_STATE)
        run(cfg, out_dir=tmp_path / "out")
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["config_sha256"] == cfg.config_sha256
        positions = sorted(
            b["position_ghz"] for b in manifest["boundaries"]
        )
        assert positions == [0.0, 6.0]
        (entry,) = manifest["maps"]
        assert entry["frequency_ghz"] == 1.0
        assert entry["regime"] is None  # single left level
        for kind in ("csv", "pgm"):
            blob = (tmp_path / "out" / entry["files"][kind]["name"]).read_bytes()
            assert entry["files"][kind]["sha256"] == hashlib.sha256(blob).hexdigest()

    def test_rerun_byte_identical(self, tmp_path):
        cfg = parse_config(MINIMAL)
        run(cfg, out_dir=tmp_path / "a")
        run(cfg, out_dir=tmp_path / "b")
        for name in ("map_00.csv", "map_00.pgm", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_formats_subset(self, tmp_path):
        cfg = parse_config(MINIMAL + "\n[output]\nformats = pgm\n")
        run(cfg, out_dir=tmp_path / "out")
        names = sorted(p.name for p in (tmp_path / "out").iterdir())
        assert names == ["manifest.json", "map_00.pgm"]


class TestMainEntry:
    def write_config(self, tmp_path, text):
        path = tmp_path / "run.cfg"
        path.write_text(text)
        return str(path)

    def test_run_exit_zero(self, tmp_path, capsys):
        path = self.write_config(tmp_path, MINIMAL)
        assert main(["run", path, "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_missing_file_is_error(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "nope.cfg")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_config_exit_two(self, tmp_path, capsys):
        path = self.write_config(tmp_path, "[model]\nwat = 1\n")
        assert main(["run", path]) == 2
        assert "unknown key" in capsys.readouterr().err

    def test_probe_matches_closed_form(self, tmp_path, capsys):
        path = self.write_config(tmp_path, THREE_STATE)
        eps, amp = 0.7, 1.3
        assert main(["probe", path, "--eps", str(eps), "--amp", str(amp)]) == 0
        out = capsys.readouterr().out
        printed = {}
        for line in out.strip().split("\n"):
            key, value = line.split()
            printed[key] = float(value)
        drive = DriveParams(amplitude=amp, frequency=1.0, dephasing=0.1)
        a = lzs_rate(0.03, eps, drive)
        b = lzs_rate(0.3, eps - 6.0, drive)
        p0r, p0l, p1r = stationary_three_state(a, b, 1.0, 0.005)
        assert printed["0R"] == pytest.approx(p0r, abs=1e-9)
        assert printed["0L"] == pytest.approx(p0l, abs=1e-9)
        assert printed["1R"] == pytest.approx(p1r, abs=1e-9)
        assert printed["P_left"] == pytest.approx(p0l, abs=1e-9)
        assert math.isclose(
            printed["P_left"] + printed["P_right"], 1.0, abs_tol=1e-9
        )

    def test_boundaries_output(self, tmp_path, capsys):
        path = self.write_config(tmp_path, THREE_STATE)
        assert main(["boundaries", path]) == 0
        out = capsys.readouterr().out
        assert "crossing 0L-0R position_ghz 0" in out
        assert "crossing 0L-1R position_ghz 6" in out
        assert "regime undetermined" in out
