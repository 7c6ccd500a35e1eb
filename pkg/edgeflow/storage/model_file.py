"""
YAML model files.

A model file describes a network with explicit value labels::

    nodes:
      - {name: S, labels: ["0", "1"]}
      - {name: Y, labels: ["0", "1"]}
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
          - {given: {S: "0"}, probs: [0.8, 0.2]}
          - {given: {S: "1"}, probs: [0.4, 0.6]}

Every parent configuration appears in exactly one row. Probabilities are
written with ``repr`` precision, so parsing a written file gives back the
same network.
"""

import itertools
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import structlog
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from edgeflow.core.distribution import Cbn, Cpt
from edgeflow.core.graph import CausalDag, NodeSpec
from edgeflow.errors import InputError, ModelFileError
from edgeflow.utils.io import atomic_write_text

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]


def _as_label(value):
    if isinstance(value, bool):
        raise ValueError("labels must be strings or numbers")
    return str(value) if isinstance(value, (int, float)) else value


class NodeDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    labels: List[str] = Field(min_length=2)

    @field_validator("labels", mode="before")
    @classmethod
    def _labels(cls, labels):
        return [_as_label(label) for label in labels] if isinstance(labels, list) else labels


class CptRowDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    given: Dict[str, str] = Field(default_factory=dict)
    probs: List[float]

    @field_validator("given", mode="before")
    @classmethod
    def _given(cls, given):
        return {k: _as_label(v) for k, v in given.items()} if isinstance(given, dict) else given


class CptDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    parents: List[str] = Field(default_factory=list)
    rows: List[CptRowDocument]


class ModelDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nodes: List[NodeDocument]
    edges: List[Tuple[str, str]] = Field(default_factory=list)
    sensitive: List[str] = Field(default_factory=list)
    cpts: Dict[str, CptDocument]


def _build_table(dag: CausalDag, name: str, document: CptDocument) -> np.ndarray:
    parents = dag.parents(name)
    if sorted(document.parents) != sorted(parents):
        raise ModelFileError(f"CPT of '{name}' lists parents {document.parents}, graph has {list(parents)}")

    order = tuple(document.parents)
    card = dag.cardinality(name)
    table = np.full(dag.cardinalities(parents + (name,)), np.nan)

    for row in document.rows:
        if set(row.given) != set(order):
            raise ModelFileError(f"CPT row of '{name}' must assign exactly {list(order)}, got {sorted(row.given)}")
        if len(row.probs) != card:
            raise ModelFileError(f"CPT row of '{name}' has {len(row.probs)} probabilities, expected {card}")
        index = tuple(dag.node(p).index_of(row.given[p]) for p in parents)
        if not np.isnan(table[index][0]):
            raise ModelFileError(f"Duplicate CPT row of '{name}' for {row.given}")
        table[index] = row.probs

    if np.isnan(table).any():
        raise ModelFileError(f"CPT of '{name}' is missing parent configurations")
    return table


def cbn_from_document(document: ModelDocument) -> Cbn:
    """Convert a validated document into a network."""
    nodes = [NodeSpec(node.name, len(node.labels), tuple(node.labels)) for node in document.nodes]
    dag = CausalDag(nodes, document.edges, document.sensitive)

    missing = [name for name in dag.names if name not in document.cpts]
    extra = sorted(set(document.cpts) - set(dag.names))
    if missing or extra:
        raise ModelFileError(f"CPT section mismatch: missing {missing}, unknown {extra}")

    cpts = [Cpt(name, dag.parents(name), _build_table(dag, name, document.cpts[name])) for name in dag.names]
    return Cbn(dag, cpts)


def document_from_cbn(model: Cbn) -> ModelDocument:
    """Describe a network as a document, in canonical node and parent order."""
    dag = model.dag
    cpts = {}
    for name in dag.names:
        parents = dag.parents(name)
        table = model.table(name)
        rows = []
        for values in itertools.product(*(range(card) for card in dag.cardinalities(parents))):
            given = {p: dag.node(p).value_labels[v] for p, v in zip(parents, values)}
            rows.append(CptRowDocument(given=given, probs=[float(p) for p in table[values]]))
        cpts[name] = CptDocument(parents=list(parents), rows=rows)

    return ModelDocument(
        nodes=[NodeDocument(name=spec.name, labels=list(spec.value_labels)) for spec in dag.nodes],
        edges=sorted(dag.edges, key=lambda edge: (dag.names.index(edge[1]), dag.names.index(edge[0]))),
        sensitive=list(dag.canonical(dag.sensitive)),
        cpts=cpts,
    )


def parse_model(text: str) -> Cbn:
    """
    Parse a YAML model description.

    Raises:
        ModelFileError: If the text is not valid YAML or does not describe a network
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ModelFileError(f"Invalid YAML: {e}") from e

    if not isinstance(raw, dict):
        raise ModelFileError("A model file must be a mapping with nodes, edges and cpts")

    try:
        document = ModelDocument.model_validate(raw)
    except ValidationError as e:
        raise ModelFileError(f"Invalid model file: {e}") from e

    try:
        return cbn_from_document(document)
    except ModelFileError:
        raise
    except InputError as e:
        raise ModelFileError(str(e)) from e


def dump_model(model: Cbn) -> str:
    """Serialize a network to YAML text."""
    data = document_from_cbn(model).model_dump()
    data["edges"] = [list(edge) for edge in data["edges"]]
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True, default_flow_style=None)


def load_model(path: PathLike) -> Cbn:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ModelFileError(f"Cannot read model file {path}: {e}") from e
    model = parse_model(text)
    logger.debug("model_loaded", path=str(path), nodes=len(model.dag.names))
    return model


def save_model(model: Cbn, path: PathLike) -> Path:
    written = atomic_write_text(path, dump_model(model))
    logger.debug("model_saved", path=str(written))
    return written
