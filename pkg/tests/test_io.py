import json

import numpy as np
import pytest

from cohirf.engine import CohirfConfig, cohirf_fit
from cohirf.exceptions import LoadError
from cohirf.hierarchy import HierarchyNode, HierarchyTree, leaf_tree
from cohirf.io import (
    DatasetSchema,
    export_hierarchy,
    import_hierarchy,
    labels_csv,
    load_csv,
    load_dataset,
    standardize,
    write_dataset_csv,
)


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_one_continuous_column(tmp_path):
    X, y = load_csv(write(tmp_path, "a\n1.5\n-2\n3e2\n"))
    assert X.tolist() == [[1.5], [-2.0], [300.0]]
    assert y is None


def test_categorical_one_hot(tmp_path):
    ds = load_dataset(write(tmp_path, "c\na\nb\na\n"))
    assert ds.X.tolist() == [[1, 0], [0, 1], [1, 0]]
    assert ds.feature_names == ["c=a", "c=b"]
    assert not ds.continuous.any()


def test_label_column_first_appearance(tmp_path):
    path = write(tmp_path, "v,cls\n1,x\n2,y\n3,x\n")
    X, y = load_csv(path, DatasetSchema({"cls": "label"}))
    assert y.tolist() == [0, 1, 0]
    assert X.shape == (3, 1)
    X, y = load_csv(path, label_column="cls")
    assert y.tolist() == [0, 1, 0]
    # without schema or flag the string column is a categorical feature
    X, y = load_csv(path)
    assert y is None and X.shape == (3, 3)


def test_ignore_and_explicit_kinds(tmp_path):
    path = write(tmp_path, "id,v,g\n10,1,1\n11,2,2\n12,3,1\n")
    ds = load_dataset(path, DatasetSchema({"id": "ignore", "g": "categorical"}))
    assert ds.feature_names == ["v", "g=1", "g=2"]
    assert ds.continuous.tolist() == [True, False, False]


def test_preprocess_standardizes_only_continuous(tmp_path):
    path = write(tmp_path, "v,g\n1,a\n2,b\n3,a\n")
    ds = load_dataset(path, preprocess=True)
    np.testing.assert_allclose(ds.X[:, 0], [-1.224744871391589, 0.0, 1.224744871391589])
    assert ds.X[:, 1:].tolist() == [[1, 0], [0, 1], [1, 0]]


@pytest.mark.parametrize(
    "text, schema, needle",
    [
        ("a,b\n1,2\n3\n", None, "row 3"),
        ("a,b\n1,2\n3,zz\n", DatasetSchema({"b": "continuous"}), "row 3, column 'b'"),
        ("a\n1\n", DatasetSchema({"nope": "continuous"}), "nope"),
        ("a\n1\n", DatasetSchema({"a": "ignore"}), "no feature"),
    ],
)
def test_load_errors(tmp_path, text, schema, needle):
    with pytest.raises(LoadError, match=needle):
        load_csv(write(tmp_path, text), schema)


def test_schema_validation(tmp_path):
    with pytest.raises(LoadError):
        DatasetSchema({"a": "label", "b": "label"})
    with pytest.raises(LoadError):
        DatasetSchema({"a": "weird"})
    path = write(tmp_path, json.dumps({"columns": {"y": "label"}}), "s.json")
    assert DatasetSchema.from_file(path).kinds == {"y": "label"}
    path = write(tmp_path, json.dumps({"y": "label"}), "s2.json")
    assert DatasetSchema.from_file(path).kinds == {"y": "label"}


def test_iris_fixture(iris_paths):
    csv_path, schema_path = iris_paths
    X, y = load_csv(csv_path, DatasetSchema.from_file(schema_path))
    assert X.shape == (150, 4)
    assert np.bincount(y).tolist() == [50, 50, 50]


def test_standardize_examples():
    np.testing.assert_allclose(standardize([[1.0], [2.0], [3.0]])[:, 0], [-1.2247448713915890, 0, 1.2247448713915890])
    assert standardize([[4.0], [4.0]]).tolist() == [[0.0], [0.0]]
    X = np.random.default_rng(0).normal(3, 7, size=(50, 4))
    Z = standardize(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(standardize(Z), Z, atol=1e-12)
    partial = standardize(X, np.array([True, False, True, False]))
    assert np.array_equal(partial[:, 1], X[:, 1])


def test_roundtrip_dataset_csv(tmp_path):
    X = np.random.default_rng(0).normal(size=(7, 3))
    y = np.array([2, 2, 0, 1, 0, 1, 2])
    path = tmp_path / "rt.csv"
    write_dataset_csv(path, X, y)
    X2, y2 = load_csv(path, DatasetSchema({"label": "label"}))
    assert X2.tobytes() == X.tobytes()
    assert y2.tolist() == [0, 0, 1, 2, 1, 2, 0]


def test_labels_csv_format():
    assert labels_csv([3, 0]) == b"sample_id,label\n0,3\n1,0\n"


def three_leaf_tree():
    nodes = leaf_tree(3) + [HierarchyNode(3, 1, 1, (0, 1, 2), 3)]
    return HierarchyTree(tuple(nodes), (3,), 3)


def test_dot_export_counts():
    dot = export_hierarchy(three_leaf_tree(), "dot").decode()
    assert dot.count("[label=") == 4
    assert dot.count("->") == 3
    assert "n0 -> n3" in dot
    assert "step 1\\nsize 3\\nmedoid 1" in dot


def test_json_roundtrip_small():
    tree = three_leaf_tree()
    back = import_hierarchy(export_hierarchy(tree, "json"))
    assert back == tree
    assert back.n_leaves == 3


def test_json_roundtrip_fit():
    X = np.random.default_rng(0).normal(size=(60, 8))
    res = cohirf_fit(X, CohirfConfig(q=4, n_repetitions=2, n_clusters=3, seed=1))
    back = import_hierarchy(export_hierarchy(res.hierarchy, "json"))
    assert back == res.hierarchy
    back.validate()
    assert json.loads(export_hierarchy(res.hierarchy))["n_leaves"] == 60


def test_unknown_format():
    with pytest.raises(ValueError):
        export_hierarchy(three_leaf_tree(), "xml")
