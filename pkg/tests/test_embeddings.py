import gzip

import numpy as np
import pytest

from emberlink import (
    FormatError,
    Record,
    Table,
    coverage,
    load_embedding_text,
    save_embedding_text,
)

TOY_TEXT = (
    "Bill 0.4 0.8 0.9\n"
    "William 0.3 0.9 0.7\n"
    "Gates 0.5 0.8 0.8\n"
    "Seattle 0.1 0.1 0.2\n"
)


@pytest.fixture
def toy_file(tmp_path):
    p = tmp_path / "vecs.txt"
    p.write_text(TOY_TEXT, encoding="utf-8")
    return str(p)


class TestLoad:
    def test_dimension_and_entries(self, toy_file):
        d = load_embedding_text(toy_file)
        assert d.dimension == 3
        assert len(d) == 4
        np.testing.assert_array_equal(d.lookup("Seattle"), [0.1, 0.1, 0.2])

    def test_unk_is_mean(self, toy_file):
        d = load_embedding_text(toy_file)
        expected = np.mean(
            np.stack([[0.4, 0.8, 0.9], [0.3, 0.9, 0.7], [0.5, 0.8, 0.8], [0.1, 0.1, 0.2]]),
            axis=0,
        )
        np.testing.assert_array_equal(d.unk_vector, expected)
        np.testing.assert_allclose(d.unk_vector, [0.325, 0.65, 0.65], atol=1e-15)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("", encoding="utf-8")
        with pytest.raises(FormatError):
            load_embedding_text(str(p))

    def test_inconsistent_dimension_reports_line(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("a 1 2 3\nb 1 2\n", encoding="utf-8")
        with pytest.raises(FormatError, match=":2"):
            load_embedding_text(str(p))

    def test_non_numeric_component(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("a 1 2 x\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_embedding_text(str(p))

    def test_gzip_detected_by_magic(self, tmp_path):
        p = tmp_path / "v.txt.gz"
        with gzip.open(p, "wt", encoding="utf-8") as f:
            f.write(TOY_TEXT)
        d = load_embedding_text(str(p))
        assert d.dimension == 3 and len(d) == 4

    def test_reload_is_bit_identical(self, toy_file, tmp_path):
        d1 = load_embedding_text(toy_file)
        out = str(tmp_path / "again.txt")
        save_embedding_text(d1, out)
        d2 = load_embedding_text(out)
        assert set(d1.entries) == set(d2.entries)
        for w in d1.entries:
            np.testing.assert_array_equal(d1.entries[w], d2.entries[w])
        np.testing.assert_array_equal(d1.unk_vector, d2.unk_vector)

    def test_case_collision_keeps_first(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("Apple 1 0\napple 0 1\n", encoding="utf-8")
        d = load_embedding_text(str(p))
        np.testing.assert_array_equal(d.lookup("apple"), [1, 0])


class TestLookup:
    def test_absent_word_gets_unk(self, toy_dictionary):
        np.testing.assert_array_equal(
            toy_dictionary.lookup("Xyzzy"), toy_dictionary.unk_vector
        )

    def test_empty_token_gets_unk(self, toy_dictionary):
        np.testing.assert_array_equal(
            toy_dictionary.lookup(""), toy_dictionary.unk_vector
        )

    def test_always_returns_dimension_length(self, toy_dictionary):
        for w in ("bill", "nope", "", "p53"):
            assert toy_dictionary.lookup(w).shape == (3,)


class TestCoverage:
    def test_full_coverage(self, toy_dictionary, toy_table):
        rep = coverage(toy_dictionary, toy_table)
        assert rep.ratio == 1.0
        assert rep.oov_words == set()
        assert rep.per_attribute == {"Name": 1.0, "City": 1.0}

    def test_one_unknown_among_ten(self, toy_dictionary, toy_schema):
        records = [
            Record(id="a", values=("bill gates william seattle bill", "gates bill seattle")),
            Record(id="b", values=("gates", "zzz")),
        ]
        table = Table(schema=toy_schema, records=records)
        rep = coverage(toy_dictionary, table)
        assert rep.total_tokens == 10
        assert rep.known_tokens == 9
        assert rep.ratio == pytest.approx(0.9)
        assert rep.oov_words == {"zzz"}

    def test_null_values_contribute_nothing(self, toy_dictionary, toy_schema):
        table = Table(
            schema=toy_schema, records=[Record(id="a", values=(None, None))]
        )
        rep = coverage(toy_dictionary, table)
        assert rep.total_tokens == 0
        assert rep.ratio == 1.0
