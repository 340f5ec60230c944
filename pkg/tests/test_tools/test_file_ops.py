"""Unit tests for file operations."""

import json
import os

import numpy as np
import pytest

from bellwave.core.inequality import DatasetError, OutcomeDataset, Provenance
from bellwave.tools.file_ops import (
    atomic_write_text,
    csv_text,
    header_comment,
    json_text,
    parse_dataset_csv,
    read_dataset_csv,
    write_dataset_csv,
)


class TestAtomicWrite:
    """Test atomic file writes."""

    def test_write_creates_parents(self, tmp_path):
        target = tmp_path / "nested" / "dir" / "out.csv"
        atomic_write_text(target, "a,b\n1,2\n")
        assert target.read_text(encoding="utf-8") == "a,b\n1,2\n"

    def test_overwrite(self, tmp_path):
        target = tmp_path / "out.txt"
        atomic_write_text(target, "first")
        atomic_write_text(target, "second")
        assert target.read_text(encoding="utf-8") == "second"
        assert os.listdir(tmp_path) == ["out.txt"]

    def test_failed_rename_leaves_nothing(self, tmp_path, mocker):
        """A failure before the rename leaves neither the target nor a temp file."""
        mocker.patch("bellwave.tools.file_ops.os.replace", side_effect=OSError("disk full"))
        target = tmp_path / "out.json"
        with pytest.raises(OSError):
            atomic_write_text(target, "{}")
        assert not target.exists()
        assert os.listdir(tmp_path) == []

    def test_failed_rename_keeps_previous_content(self, tmp_path, mocker):
        target = tmp_path / "out.json"
        atomic_write_text(target, "old")
        mocker.patch("bellwave.tools.file_ops.os.replace", side_effect=OSError("disk full"))
        with pytest.raises(OSError):
            atomic_write_text(target, "new")
        assert target.read_text(encoding="utf-8") == "old"

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            atomic_write_text(blocker / "out.csv", "data")


class TestTextFormats:
    """Test CSV and JSON rendering."""

    def test_header_comment(self):
        assert header_comment("scan", 7, "abc") == "# bellwave scan seed=7 config_hash=abc"
        assert header_comment("scan", None, "abc") == "# bellwave scan seed=none config_hash=abc"

    def test_csv_text(self):
        text = csv_text("# h", ["delta_rad", "E_mc", "n_events", "ok"],
                        [[0.1, None, 10, True], [np.float64(0.5), -1.0, np.int64(3), False]])
        assert text == "# h\ndelta_rad,E_mc,n_events,ok\n0.10000000000000001,,10,true\n0.5,-1,3,false\n"

    def test_csv_digits(self):
        text = csv_text("# h", ["x"], [[1 / 3]], digits=6)
        assert text.splitlines()[2] == "0.333333"

    def test_json_text(self):
        text = json_text({"b": np.float64(1.5), "a": np.arange(3), "c": np.int32(2)})
        assert text.endswith("}\n")
        assert list(json.loads(text)) == ["a", "b", "c"]
        assert json.loads(text)["a"] == [0, 1, 2]

    def test_json_rejects_unknown_types(self):
        with pytest.raises(TypeError):
            json_text({"x": object()})


class TestDatasetCsv:
    """Test +/-1 dataset CSV parsing."""

    def test_parse_with_comments(self):
        text = "# bellwave chsh seed=1 config_hash=x\na,a_prime,b,b_prime\n1,-1,+1,1\n-1,-1,1,-1\n"
        dataset = parse_dataset_csv(text)
        assert dataset.provenance is Provenance.EXTERNAL
        assert len(dataset) == 2
        np.testing.assert_array_equal(dataset.columns["b"], [1, 1])
        np.testing.assert_array_equal(dataset.columns["b_prime"], [1, -1])

    def test_bad_value_names_row_and_column(self):
        text = "a,a_prime,b,b_prime\n1,1,1,1\n1,1,0,1\n"
        with pytest.raises(DatasetError) as exc_info:
            parse_dataset_csv(text, source="data.csv")
        assert exc_info.value.row == 3
        assert exc_info.value.column == "b"
        assert "row 3" in str(exc_info.value)
        assert "'b'" in str(exc_info.value)

    def test_short_row(self):
        with pytest.raises(DatasetError) as exc_info:
            parse_dataset_csv("a,b\n1,1\n1\n")
        assert exc_info.value.row == 3

    def test_duplicate_header(self):
        with pytest.raises(DatasetError):
            parse_dataset_csv("a,a\n1,1\n")

    def test_no_header(self):
        with pytest.raises(DatasetError):
            parse_dataset_csv("# only a comment\n")

    def test_no_rows(self):
        with pytest.raises(DatasetError):
            parse_dataset_csv("a,b\n")

    def test_write_then_read(self, tmp_path):
        dataset = OutcomeDataset(
            {"a": [1, -1, 1], "a_prime": [1, 1, -1], "b": [-1, -1, 1], "b_prime": [1, -1, -1]},
            Provenance.SHARED_RUN,
        )
        path = write_dataset_csv(tmp_path / "shared.csv", dataset, "# bellwave chsh seed=1 config_hash=x")
        assert path.read_text(encoding="utf-8").startswith("# bellwave chsh")
        loaded = read_dataset_csv(path)
        assert list(loaded.columns) == list(dataset.columns)
        for name in dataset.columns:
            np.testing.assert_array_equal(loaded.columns[name], dataset.columns[name])

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_dataset_csv(tmp_path / "missing.csv")
