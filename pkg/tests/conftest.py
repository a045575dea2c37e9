import numpy as np
import pytest

from emberlink import EmbeddingDictionary, Record, Schema, Table


@pytest.fixture
def toy_dictionary():
    """Four-word, 3-dimensional dictionary used across the worked examples."""
    entries = {
        "bill": np.array([0.4, 0.8, 0.9]),
        "william": np.array([0.3, 0.9, 0.7]),
        "gates": np.array([0.5, 0.8, 0.8]),
        "seattle": np.array([0.1, 0.1, 0.2]),
    }
    unk = np.mean(np.stack(list(entries.values())), axis=0)
    return EmbeddingDictionary(dimension=3, entries=entries, unk_vector=unk)


@pytest.fixture
def toy_schema():
    return Schema(attributes=("id", "Name", "City"), id_attribute="id")


@pytest.fixture
def toy_records():
    return (
        Record(id="t1", values=("Bill Gates", "Seattle")),
        Record(id="t2", values=("William Gates", "Seattle")),
    )


@pytest.fixture
def toy_table(toy_schema, toy_records):
    return Table(schema=toy_schema, records=list(toy_records))
