import os
import pytest
from permcodes import cli, permcodes
from permcodes.cli import commands
from permcodes.cli.constants import ExitCode
from permcodes.codebook import CodebookError, EncodingFailureError
from permcodes.codebook.constants import SUDOKU_9_COUNT


def write_grid(path, q, symbols):
    path.write_text(f"{q} {len(symbols)}\n" + " ".join(str(s) for s in symbols) + "\n")
    return str(path)


class TestRun():
    def test_count(self, capsys):
        assert cli.run(["count", "--structure", "semi_pandiagonal", "--q", "5"]) == ExitCode.OK
        assert capsys.readouterr().out.strip() == "360"

    def test_count_cache(self, capsys, tmp_path, mocker):
        cache = str(tmp_path / "counts.db")
        assert cli.run(["count", "--structure", "latin", "--q", "3", "--cache", cache]) == ExitCode.OK
        counter = mocker.patch.object(commands, "count_codewords")
        assert cli.run(["count", "--structure", "latin", "--q", "3", "--cache", cache]) == ExitCode.OK
        counter.assert_not_called()
        assert capsys.readouterr().out.split() == ["12", "12"]

    def test_count_cache_empty_file(self, capsys, tmp_path):
        cache = tmp_path / "counts.db"
        cache.write_bytes(b"")
        assert cli.run(["count", "--structure", "latin", "--q", "3", "--cache", str(cache)]) == ExitCode.OK
        assert capsys.readouterr().out.strip() == "12"

    def test_count_cache_not_a_database(self, capsys, tmp_path):
        cache = tmp_path / "counts.txt"
        cache.write_text("latin 3 12\n" * 50)
        assert cli.run(["count", "--structure", "latin", "--q", "3", "--cache", str(cache)]) == ExitCode.INVALID
        assert "Invalid input" in capsys.readouterr().err

    def test_build(self, capsys):
        assert cli.run(["build", "--structure", "sudoku", "--q", "4"]) == ExitCode.OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "# sudoku q=4 N=16 constraints=12 d_v=3 d_c=4"
        assert lines[1] == "0: 0 1 2 3"

    def test_analyze_rates(self, capsys):
        status = cli.run(["analyze", "rates", "--q", "9", "--count", str(SUDOKU_9_COUNT), "--n", "81"])
        assert status == ExitCode.OK
        header, row = capsys.readouterr().out.splitlines()
        assert header.startswith("q,dv,r_cf")
        assert row.endswith(",0.2824")

    def test_unknown_flag(self, capsys):
        assert cli.run(["count", "--structure", "latin", "--q", "3", "--bogus"]) == ExitCode.USAGE
        assert "unrecognized arguments" in capsys.readouterr().err

    def test_missing_command(self):
        assert cli.run([]) == ExitCode.USAGE

    def test_help(self, capsys):
        assert cli.run(["--help"]) == ExitCode.OK
        assert "decode-erasure" in capsys.readouterr().out

    def test_validate(self, capsys, tmp_path, sudoku4_codeword):
        good = write_grid(tmp_path / "good.txt", 4, sudoku4_codeword)
        bad = write_grid(tmp_path / "bad.txt", 4, [1] * 16)
        assert cli.run(["validate", "--structure", "sudoku", "--q", "4", good]) == ExitCode.OK
        assert cli.run(["validate", "--structure", "sudoku", "--q", "4", bad]) == ExitCode.INVALID
        assert capsys.readouterr().out.split() == ["valid", "invalid"]

    def test_header_mismatch(self, tmp_path, sudoku4_codeword):
        grid = write_grid(tmp_path / "grid.txt", 4, sudoku4_codeword)
        assert cli.run(["validate", "--structure", "sudoku", "--q", "9", grid]) == ExitCode.INVALID

    def test_missing_file(self, tmp_path):
        missing = str(tmp_path / "missing.txt")
        assert cli.run(["validate", "--structure", "sudoku", "--q", "4", missing]) == ExitCode.INVALID

    def test_decode_erasure(self, capsys, tmp_path, sudoku4_codeword):
        symbols = list(sudoku4_codeword)
        for var in (3, 6, 12):
            symbols[var] = 0
        grid = write_grid(tmp_path / "erased.txt", 4, symbols)
        assert cli.run(["decode-erasure", "--structure", "sudoku", "--q", "4", grid]) == ExitCode.OK
        out = capsys.readouterr().out
        assert "# status=decoded" in out
        assert "1 2 3 4" in out

    def test_decode_erasure_stalled(self, capsys, tmp_path):
        grid = write_grid(tmp_path / "erased.txt", 4, [0] * 16)
        assert cli.run(["decode-erasure", "--structure", "sudoku", "--q", "4", grid]) == ExitCode.STALLED
        assert "# status=stalled" in capsys.readouterr().out

    @pytest.mark.parametrize("grids", [
        ([0] * 9, [1, 1, 0, 0, 0, 0, 0, 0, 0]),
        ([1, 1, 0, 0, 0, 0, 0, 0, 0], [0] * 9),
    ])
    def test_contradiction_outranks_stall(self, tmp_path, grids):
        path = tmp_path / "grids.txt"
        path.write_text("".join(f"3 9\n{' '.join(str(s) for s in symbols)}\n" for symbols in grids))
        command = ["decode-erasure", "--structure", "latin", "--q", "3", str(path)]
        assert cli.run(command) == ExitCode.CONTRADICTION
        soft = ["decode-soft", "--structure", "latin", "--q", "3", str(path), "--out", str(tmp_path / "m.csv")]
        assert cli.run(soft) == ExitCode.CONTRADICTION

    def test_decode_soft(self, capsys, tmp_path, sudoku4_codeword):
        grid = write_grid(tmp_path / "received.txt", 4, sudoku4_codeword)
        out = str(tmp_path / "marginals.csv")
        assert cli.run(["decode-soft", "--structure", "sudoku", "--q", "4", grid, "--out", out]) == ExitCode.OK
        lines = (tmp_path / "marginals.csv").read_text().splitlines()
        assert lines[0] == "grid,var,p1,p2,p3,p4"
        assert len(lines) == 17
        assert "status=decoded" in capsys.readouterr().err

    def test_permanent(self, capsys, tmp_path):
        matrix = tmp_path / "matrix.txt"
        matrix.write_text("1 2\n3 4\n")
        assert cli.run(["permanent", str(matrix)]) == ExitCode.OK
        assert cli.run(["permanent", str(matrix), "--method", "naive"]) == ExitCode.OK
        assert capsys.readouterr().out.split() == ["10", "10"]

    def test_encode_and_recover(self, capsys, tmp_path):
        source = tmp_path / "source.txt"
        source.write_text("1")
        codewords = str(tmp_path / "codewords.txt")
        encode = ["encode", "--structure", "latin", "--q", "2", "--input", str(source), "--max-attempts", "1",
                  "--out", codewords]
        assert cli.run(encode) == ExitCode.OK
        assert (tmp_path / "codewords.txt").read_text().split() == ["2", "4", "2", "1", "1", "2"]
        assert "bits_consumed=1" in capsys.readouterr().err

        recover = ["recover", "--structure", "latin", "--q", "2", codewords, "--max-attempts", "1"]
        assert cli.run(recover) == ExitCode.OK
        assert capsys.readouterr().out.startswith("1")

    def test_encoding_failure(self, tmp_path, mocker):
        mocker.patch.object(commands, "encode_codeword", side_effect=EncodingFailureError("no luck", 3))
        source = tmp_path / "source.txt"
        source.write_text("1011")
        command = ["encode", "--structure", "sudoku", "--q", "4", "--input", str(source)]
        assert cli.run(command) == ExitCode.ENCODING_FAILURE

    def test_library_error_without_own_code(self, capsys):
        assert commands.on_error(CodebookError("unexpected"), "count") == ExitCode.INVALID
        assert "Invalid input: unexpected" in capsys.readouterr().err

    def test_construction_failure(self):
        assert cli.run(["sample", "--structure", "pandiagonal", "--q", "4", "--seed", "1"]) == ExitCode.CONSTRUCTION

    def test_random_regular_needs_n(self):
        assert cli.run(["build", "--structure", "random_regular", "--q", "3"]) == ExitCode.INVALID

    def test_simulate_is_reproducible(self, tmp_path):
        outputs = []
        for name in ("first.csv", "second.csv"):
            out = tmp_path / name
            command = ["simulate", "--structure", "sudoku", "--q", "4", "--eps", "0.3,0.6", "--seed", "5",
                       "--min-codewords", "2", "--min-block-errors", "1", "--max-trials", "40", "--patterns", "10",
                       "--no-timing", "--out", str(out)]
            assert cli.run(command) == ExitCode.OK
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        assert outputs[0].startswith(b"eps,trials,block_errors")


class TestEnvironment():
    def test_default_workers(self, monkeypatch):
        monkeypatch.delenv("PERMCODES_WORKERS", raising=False)
        assert commands.default_workers() == 1
        monkeypatch.setenv("PERMCODES_WORKERS", "4")
        assert commands.default_workers() == 4

    @pytest.mark.parametrize("value", ["zero", "0", "-2"])
    def test_invalid_workers(self, monkeypatch, value):
        monkeypatch.setenv("PERMCODES_WORKERS", value)
        with pytest.raises(ValueError):
            commands.default_workers()

    def test_invalid_workers_exit_code(self, monkeypatch):
        monkeypatch.setenv("PERMCODES_WORKERS", "many")
        command = ["simulate", "--structure", "latin", "--q", "3", "--eps", "0.1", "--seed", "1"]
        assert cli.run(command) == ExitCode.INVALID

    def test_invalid_log_level(self, monkeypatch, tmp_path):
        monkeypatch.setenv("PERMCODES_LOG_DIR", str(tmp_path / "logs"))
        monkeypatch.setenv("PERMCODES_LOG_LEVEL", "LOUD")
        with pytest.raises(ValueError):
            permcodes.configure_logging()

    def test_log_directory_created(self, monkeypatch, tmp_path):
        log_dir = tmp_path / "logs"
        monkeypatch.setenv("PERMCODES_LOG_DIR", str(log_dir))
        monkeypatch.setenv("PERMCODES_LOG_LEVEL", "debug")
        permcodes.configure_logging()
        assert os.path.isdir(log_dir)

    def test_main_exit_status(self, mocker):
        mocker.patch.object(permcodes, "configure_logging")
        mocker.patch.object(permcodes.cli, "run", return_value=ExitCode.STALLED)
        with pytest.raises(SystemExit) as exit_:
            permcodes.main(["decode-erasure"])
        assert exit_.value.code == ExitCode.STALLED
