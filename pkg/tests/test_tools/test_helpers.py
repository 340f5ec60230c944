"""Unit tests for helper functions."""

import math

import pytest
from hypothesis import given, strategies as st

from bellwave.utils.helpers import (
    config_hash,
    ensure_directory,
    format_float,
    iter_chunks,
    parse_angle,
    parse_angle_list,
)


class TestParseAngle:
    """Test angle parsing."""

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("22.5deg", math.pi / 8),
            ("180deg", math.pi),
            ("0.5rad", 0.5),
            ("0.5", 0.5),
            ("-45deg", -math.pi / 4),
            (" 1e-3 ", 1e-3),
            (".25", 0.25),
        ],
    )
    def test_valid(self, text, expected):
        assert parse_angle(text) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("text", ["", "deg", "12 degrees", "abc", "1.0.0", "nan", "inf"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            parse_angle(text)

    def test_list(self):
        values = parse_angle_list("0,45deg, 22.5deg ,67.5deg")
        assert values == pytest.approx([0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8])

    def test_list_skips_empty_items(self):
        assert parse_angle_list("1,,2,") == [1.0, 2.0]


class TestFormatFloat:
    """Test CSV float formatting."""

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_seventeen_digits_round_trip(self, value):
        assert float(format_float(value)) == value

    def test_fewer_digits(self):
        assert format_float(math.pi, 6) == "3.14159"


class TestConfigHash:
    """Test config hashing."""

    def test_key_order_does_not_matter(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})

    def test_values_matter(self):
        assert config_hash({"seed": 1}) != config_hash({"seed": 2})

    def test_length(self):
        digest = config_hash({})
        assert len(digest) == 16
        int(digest, 16)


class TestChunks:
    """Test chunk iteration."""

    def test_cover_total(self):
        assert list(iter_chunks(10, 4)) == [(0, 4), (4, 4), (8, 2)]

    def test_empty(self):
        assert list(iter_chunks(0, 4)) == []

    def test_invalid_chunk_size(self):
        with pytest.raises(ValueError):
            list(iter_chunks(10, 0))


def test_ensure_directory(tmp_path):
    target = tmp_path / "a" / "b"
    assert ensure_directory(target) == target
    assert target.is_dir()
    ensure_directory(target)
