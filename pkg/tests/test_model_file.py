"""Tests for YAML model files."""

import pytest

from edgeflow.errors import ModelFileError
from edgeflow.storage import dump_model, load_model, parse_model, save_model

TINY_YAML = """
nodes:
  - {name: S, labels: [0, 1]}
  - {name: Y, labels: [low, high]}
edges:
  - [S, Y]
sensitive: [S]
cpts:
  S:
    parents: []
    rows:
      - {given: {}, probs: [0.6, 0.4]}
  Y:
    parents: [S]
    rows:
      - {given: {S: 1}, probs: [0.4, 0.6]}
      - {given: {S: 0}, probs: [0.8, 0.2]}
"""


class TestParse:
    def test_tiny(self):
        model = parse_model(TINY_YAML)
        assert model.dag.names == ("S", "Y")
        assert model.dag.sensitive == {"S"}
        assert model.dag.node("Y").value_labels == ("low", "high")
        assert model.table("Y").tolist() == [[0.8, 0.2], [0.4, 0.6]]
        assert model.query({"Y": 1}) == pytest.approx(0.36)

    def test_invalid_yaml(self):
        with pytest.raises(ModelFileError, match="Invalid YAML"):
            parse_model("nodes: [")

    def test_not_a_mapping(self):
        with pytest.raises(ModelFileError):
            parse_model("- 1\n- 2\n")

    def test_boolean_labels_rejected(self):
        with pytest.raises(ModelFileError):
            parse_model(TINY_YAML.replace("[low, high]", "[no, yes]"))

    def test_unknown_key(self):
        with pytest.raises(ModelFileError):
            parse_model(TINY_YAML + "extra: 1\n")

    def test_missing_row(self):
        text = TINY_YAML.replace("      - {given: {S: 0}, probs: [0.8, 0.2]}\n", "")
        with pytest.raises(ModelFileError, match="missing parent configurations"):
            parse_model(text)

    def test_duplicate_row(self):
        text = TINY_YAML.replace("{S: 1}, probs: [0.4, 0.6]", "{S: 0}, probs: [0.4, 0.6]")
        with pytest.raises(ModelFileError, match="Duplicate"):
            parse_model(text)

    def test_wrong_probability_count(self):
        with pytest.raises(ModelFileError, match="probabilities"):
            parse_model(TINY_YAML.replace("[0.6, 0.4]", "[0.6, 0.3, 0.1]"))

    def test_wrong_parents(self):
        with pytest.raises(ModelFileError, match="parents"):
            parse_model(TINY_YAML.replace("    parents: [S]", "    parents: []"))

    def test_missing_cpt(self):
        text = TINY_YAML.split("  Y:\n")[0]
        with pytest.raises(ModelFileError, match="missing"):
            parse_model(text)

    def test_rows_must_sum_to_one(self):
        with pytest.raises(ModelFileError):
            parse_model(TINY_YAML.replace("[0.6, 0.4]", "[0.6, 0.5]"))

    def test_cycle(self):
        text = TINY_YAML.replace("  - [S, Y]\n", "  - [S, Y]\n  - [Y, S]\n")
        with pytest.raises(ModelFileError):
            parse_model(text)


class TestRoundTrip:
    def test_bail_file(self, bail, tmp_path):
        path = save_model(bail, tmp_path / "nested" / "bail.yaml")
        assert load_model(path) == bail

    def test_dump_is_stable(self, tiny):
        text = dump_model(tiny)
        assert dump_model(parse_model(text)) == text
        assert text.startswith("nodes:")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFileError, match="Cannot read"):
            load_model(tmp_path / "absent.yaml")
