"""JSON model files: parsing with line-anchored diagnostics, serialization, bundled catalog."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .lie_algebra import MAX_CLASS, MAX_DIM, AlgebraError, NilpotentAlgebra
from .randers import RandersStructure, StructureError

MODEL_SCHEMA = "randers-model/1"


class ModelError(ValueError):
    """Parse or validation failure; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<model>"):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        where = f"{self.source}:{self.line}" if self.line else self.source
        return f"{where}: error: {self.message}"


@dataclass
class Model:
    structure: RandersStructure
    labels: tuple
    sha256: str
    source: str

    @property
    def alg(self) -> NilpotentAlgebra:
        return self.structure.alg


def _line_of(text: str, key: str, nth: int = 0) -> int | None:
    hits = [m.start() for m in re.finditer(rf'"{re.escape(key)}"\s*:', text)]
    if len(hits) <= nth:
        return None
    return text.count("\n", 0, hits[nth]) + 1


def _index(value, dim: int, what: str, line, source) -> int:
    try:
        k = int(value)
    except (TypeError, ValueError):
        raise ModelError(f"{what} index {value!r} is not an integer", line, source) from None
    if isinstance(value, float) and value != k:
        raise ModelError(f"{what} index {value!r} is not an integer", line, source)
    if not 1 <= k <= dim:
        raise ModelError(f"{what} index {k} outside 1..{dim}", line, source)
    return k - 1


def _matrix(raw, dim: int, line, source) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape == (dim * dim,):
        arr = arr.reshape(dim, dim)
    if arr.shape != (dim, dim):
        raise ModelError(f"metric must be {dim}x{dim} (nested or flat row-major), got shape {arr.shape}", line, source)
    return arr


def parse_model(text: str, source: str = "<model>") -> Model:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
    if not isinstance(data, dict):
        raise ModelError("top level must be an object", 1, source)
    schema = data.get("schema", MODEL_SCHEMA)
    if schema != MODEL_SCHEMA:
        raise ModelError(f"unsupported schema {schema!r}", _line_of(text, "schema"), source)
    for key in ("dim", "metric"):
        if key not in data:
            raise ModelError(f"missing required field {key!r}", 1, source)
    dim = data["dim"]
    if not isinstance(dim, int) or not 1 <= dim <= MAX_DIM:
        raise ModelError(f"dim must be an integer in 1..{MAX_DIM}", _line_of(text, "dim"), source)
    class_bound = data.get("class_bound", MAX_CLASS)
    if not isinstance(class_bound, int) or not 1 <= class_bound <= MAX_CLASS:
        raise ModelError(f"class_bound must be an integer in 1..{MAX_CLASS}", _line_of(text, "class_bound"), source)

    c = np.zeros((dim, dim, dim))
    brackets = data.get("brackets", [])
    if not isinstance(brackets, list):
        raise ModelError("brackets must be a list", _line_of(text, "brackets"), source)
    for n, entry in enumerate(brackets):
        line = _line_of(text, "i", n) or _line_of(text, "brackets")
        if not isinstance(entry, dict) or not {"i", "j", "coeffs"} <= set(entry):
            raise ModelError('each bracket needs "i", "j" and "coeffs"', line, source)
        i = _index(entry["i"], dim, "bracket", line, source)
        j = _index(entry["j"], dim, "bracket", line, source)
        if i == j:
            raise ModelError(f"bracket [e{i + 1}, e{i + 1}] must be zero and cannot be listed", line, source)
        if not isinstance(entry["coeffs"], dict):
            raise ModelError("coeffs must map output index to value", line, source)
        for k, val in entry["coeffs"].items():
            kk = _index(k, dim, "coefficient", line, source)
            try:
                v = float(val)
            except (TypeError, ValueError):
                raise ModelError(f"coefficient {val!r} is not a number", line, source) from None
            c[i, j, kk] += v
            c[j, i, kk] -= v

    labels = tuple(data.get("labels", ()))
    if labels and len(labels) != dim:
        raise ModelError(f"labels must have {dim} entries", _line_of(text, "labels"), source)
    A = _matrix(data["metric"], dim, _line_of(text, "metric"), source)
    vector = np.asarray(data.get("vector", [0.0] * dim), dtype=float)
    if vector.shape != (dim,):
        raise ModelError(f"vector must have {dim} entries", _line_of(text, "vector"), source)
    try:
        alg = NilpotentAlgebra(c, class_bound=class_bound, labels=labels)
        structure = RandersStructure(alg, A, vector)
    except AlgebraError as exc:
        raise ModelError(str(exc), _line_of(text, "brackets"), source) from None
    except StructureError as exc:
        key = "vector" if "admissibility" in str(exc) else "metric"
        raise ModelError(str(exc), _line_of(text, key), source) from None
    digest = hashlib.sha256(text.encode()).hexdigest()
    return Model(structure, labels, digest, source)


def catalog_names() -> list[str]:
    root = resources.files("randers_soliton") / "catalog"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def catalog_path(name: str):
    return resources.files("randers_soliton") / "catalog" / f"{name}.json"


def load_model(path_or_name) -> Model:
    """Read a model file; a bare catalog name (``heisenberg_killing``) is also accepted."""
    path = Path(path_or_name)
    if path.exists():
        return parse_model(path.read_text(), str(path))
    if str(path_or_name) in catalog_names():
        ref = catalog_path(str(path_or_name))
        return parse_model(ref.read_text(), f"catalog:{path_or_name}")
    raise FileNotFoundError(f"no such model file or catalog entry: {path_or_name}")


def model_to_dict(structure: RandersStructure, labels=()) -> dict:
    alg = structure.alg
    n = alg.dim
    brackets = []
    for i in range(n):
        for j in range(i + 1, n):
            coeffs = {str(k + 1): float(alg.c[i, j, k]) for k in range(n) if alg.c[i, j, k] != 0}
            if coeffs:
                brackets.append({"i": i + 1, "j": j + 1, "coeffs": coeffs})
    out = {"schema": MODEL_SCHEMA, "dim": n, "class_bound": alg.class_bound}
    if labels:
        out["labels"] = list(labels)
    out["brackets"] = brackets
    out["metric"] = np.asarray(structure.A).tolist()
    out["vector"] = np.asarray(structure.X_e).tolist()
    return out


def serialize_model(structure: RandersStructure, labels=()) -> str:
    return json.dumps(model_to_dict(structure, labels), indent=2) + "\n"
