import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emberlink import (
    ContractError,
    FormatError,
    IntegrityError,
    LabeledPair,
    Record,
    Schema,
    Table,
    align_schemas,
    load_matches,
    load_table,
    write_matches,
    write_table,
)
from emberlink.data_model import validate_matches


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


class TestSchema:
    def test_duplicate_attribute_rejected(self):
        with pytest.raises(ContractError):
            Schema(attributes=("id", "a", "a"), id_attribute="id")

    def test_id_must_be_member(self):
        with pytest.raises(ContractError):
            Schema(attributes=("a", "b"), id_attribute="id")

    def test_value_attributes_exclude_id(self):
        s = Schema(attributes=("a", "key", "b"), id_attribute="key")
        assert s.value_attributes == ("a", "b")
        assert s.arity == 2


class TestLoadTable:
    def test_basic_parse(self, tmp_path):
        path = write(tmp_path, "t.csv", "id,Name,City\n1,Bill,Seattle\n2,Ann,Boston\n3,Joe,Austin\n")
        table = load_table(path)
        assert table.schema.value_attributes == ("Name", "City")
        assert len(table) == 3
        assert table.record("2").values == ("Ann", "Boston")

    def test_two_tuple_relation(self, tmp_path):
        path = write(
            tmp_path, "t.csv",
            "id,Name,City\nt1,Bill Gates,Seattle\nt2,William Gates,Seattle\n",
        )
        table = load_table(path)
        assert len(table) == 2
        assert table.schema.arity == 2
        assert table.record("t1").values == ("Bill Gates", "Seattle")

    def test_quoted_comma_is_one_field(self, tmp_path):
        path = write(tmp_path, "t.csv", 'id,Name\n1,"Gates, Bill"\n')
        table = load_table(path)
        assert table.record("1").values == ("Gates, Bill",)

    def test_doubled_quote_and_newline_in_field(self, tmp_path):
        path = write(tmp_path, "t.csv", 'id,Name\n1,"say ""hi""\nthere"\n')
        table = load_table(path)
        assert table.record("1").values == ('say "hi"\nthere',)

    def test_null_vs_empty_distinction(self, tmp_path):
        path = write(tmp_path, "t.csv", 'id,A,B\n1,,""\n')
        rec = load_table(path).record("1")
        assert rec.values == (None, "")

    def test_missing_header(self, tmp_path):
        path = write(tmp_path, "t.csv", "")
        with pytest.raises(FormatError):
            load_table(path)

    def test_id_column_absent(self, tmp_path):
        path = write(tmp_path, "t.csv", "a,b\n1,2\n")
        with pytest.raises(FormatError):
            load_table(path, id_column="id")

    def test_duplicate_ids(self, tmp_path):
        path = write(tmp_path, "t.csv", "id,a\n1,x\n1,y\n")
        with pytest.raises(IntegrityError):
            load_table(path)

    def test_arity_mismatch_reports_line(self, tmp_path):
        path = write(tmp_path, "t.csv", "id,a,b\n1,x,y\n2,only\n")
        with pytest.raises(FormatError, match=":3:"):
            load_table(path)

    def test_custom_id_column_position(self, tmp_path):
        path = write(tmp_path, "t.csv", "a,key,b\nx,1,y\n")
        table = load_table(path, id_column="key")
        assert table.record("1").values == ("x", "y")


_field = st.one_of(
    st.none(),
    st.text(
        alphabet=st.characters(
            codec="utf-8", exclude_characters="\r", max_codepoint=0x2FF
        ),
        max_size=12,
    ),
)


@settings(max_examples=60, deadline=None)
@given(
    rows=st.lists(st.tuples(_field, _field), min_size=0, max_size=8),
)
def test_table_round_trip(tmp_path_factory, rows):
    schema = Schema(attributes=("id", "a", "b"), id_attribute="id")
    records = [Record(id=f"r{i}", values=v) for i, v in enumerate(rows)]
    table = Table(schema=schema, records=records)
    path = str(tmp_path_factory.mktemp("rt") / "t.csv")
    write_table(table, path)
    again = load_table(path)
    assert again.schema.attributes == table.schema.attributes
    assert [r.id for r in again.records] == [r.id for r in table.records]
    assert [r.values for r in again.records] == [r.values for r in table.records]


class TestMatches:
    def test_empty_file_with_header(self, tmp_path):
        path = write(tmp_path, "m.csv", "left_id,right_id\n")
        assert load_matches(path) == []

    def test_counts(self, tmp_path):
        lines = ["left_id,right_id"] + [f"L{i},R{i}" for i in range(112)]
        path = write(tmp_path, "m.csv", "\n".join(lines) + "\n")
        pairs = load_matches(path)
        assert len(pairs) == 112
        assert all(p.is_match for p in pairs)

    def test_unknown_id_is_integrity_error(self, tmp_path, toy_table):
        pairs = [LabeledPair("t1", "missing")]
        with pytest.raises(IntegrityError, match="missing"):
            validate_matches(pairs, toy_table, toy_table)

    def test_round_trip(self, tmp_path):
        pairs = [LabeledPair("a", "b"), LabeledPair("c", "d")]
        path = str(tmp_path / "m.csv")
        write_matches(pairs, path)
        again = load_matches(path)
        assert {p.key() for p in again} == {p.key() for p in pairs}

    def test_wrong_column_count(self, tmp_path):
        path = write(tmp_path, "m.csv", "a,b,c\n1,2,3\n")
        with pytest.raises(FormatError):
            load_matches(path)


class TestAlignSchemas:
    def test_identical(self, toy_table):
        assert align_schemas(toy_table, toy_table) == [("Name", "Name"), ("City", "City")]

    def test_positional_despite_names(self, toy_table, toy_records):
        other = Table(
            schema=Schema(attributes=("id", "name", "city"), id_attribute="id"),
            records=list(toy_records),
        )
        assert align_schemas(toy_table, other) == [("Name", "name"), ("City", "city")]

    def test_arity_mismatch(self, toy_table):
        wide = Table(
            schema=Schema(attributes=("id", "a", "b", "c"), id_attribute="id"),
            records=[],
        )
        with pytest.raises(ContractError):
            align_schemas(toy_table, wide)
