"""Feature taxonomy: schema definitions, answer validation, question flow, encoding.

A schema is an ordered list of feature definitions describing the
instructor/course profile collected during a consultation.  Completed answer
sets encode into dense vectors in [0, 1] that feed the similarity search.
All functions here are pure; schema objects are immutable after load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Optional, Union

from .errors import (
    IncompleteFeatures,
    MalformedSchema,
    NotInVocabulary,
    SchemaVersionMismatch,
    TypeMismatch,
    UnknownFeature,
    ValueOutOfRange,
)

Answer = Union[str, float, bool]

KIND_CATEGORICAL = "categorical"
KIND_NUMERIC = "numeric"
KIND_BOOLEAN = "boolean"
KINDS = (KIND_CATEGORICAL, KIND_NUMERIC, KIND_BOOLEAN)

# skip-condition operators permitted per feature kind of the referenced feature
_SKIP_OPS_BY_KIND = {
    KIND_CATEGORICAL: ("eq", "ne"),
    KIND_BOOLEAN: ("eq", "ne"),
    KIND_NUMERIC: ("eq", "ne", "lt", "le", "gt", "ge"),
}

_TRUE_WORDS = ("true", "yes", "y", "1")
_FALSE_WORDS = ("false", "no", "n", "0")


@dataclass(frozen=True)
class SkipCondition:
    """Predicate over an earlier feature; when it holds, the question is skipped."""

    feature_id: str
    op: str
    value: Answer

    def holds(self, answered: "SessionFeatures") -> bool:
        # An unanswered (or declined) referenced feature never triggers a skip.
        actual = answered.answers.get(self.feature_id)
        if actual is None:
            return False
        if self.op == "eq":
            return actual == self.value
        if self.op == "ne":
            return actual != self.value
        if self.op == "lt":
            return actual < self.value
        if self.op == "le":
            return actual <= self.value
        if self.op == "gt":
            return actual > self.value
        if self.op == "ge":
            return actual >= self.value
        raise MalformedSchema(f"unknown skip operator {self.op!r}")


@dataclass(frozen=True)
class FeatureDef:
    """One question in the consultation flow."""

    id: str
    prompt: str
    kind: str
    values: tuple[str, ...] = ()
    min_value: float = 0.0
    max_value: float = 0.0
    skip_condition: Optional[SkipCondition] = None
    required: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedSchema(f"feature {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == KIND_CATEGORICAL:
            if len(set(self.values)) < 2 or len(self.values) != len(set(self.values)):
                raise MalformedSchema(
                    f"feature {self.id!r}: categorical needs >= 2 distinct values"
                )
        elif self.kind == KIND_NUMERIC:
            lo, hi = self.min_value, self.max_value
            if not (lo == lo and hi == hi) or lo in (float("inf"), float("-inf")) \
                    or hi in (float("inf"), float("-inf")) or not lo < hi:
                raise MalformedSchema(
                    f"feature {self.id!r}: numeric bounds must be finite with min < max"
                )

    @property
    def width(self) -> int:
        """Number of vector slots this feature occupies."""
        return len(self.values) if self.kind == KIND_CATEGORICAL else 1


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered, immutable feature taxonomy."""

    version: str
    features: tuple[FeatureDef, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for i, fdef in enumerate(self.features):
            if fdef.id in seen:
                raise MalformedSchema(f"features[{i}]: duplicate feature id {fdef.id!r}")
            cond = fdef.skip_condition
            if cond is not None:
                if cond.feature_id not in seen:
                    raise MalformedSchema(
                        f"features[{i}] ({fdef.id!r}): skip_condition may only reference"
                        f" earlier features, got {cond.feature_id!r}"
                    )
                ref = next(f for f in self.features if f.id == cond.feature_id)
                if cond.op not in _SKIP_OPS_BY_KIND[ref.kind]:
                    raise MalformedSchema(
                        f"features[{i}] ({fdef.id!r}): operator {cond.op!r} not valid"
                        f" against {ref.kind} feature {ref.id!r}"
                    )
                _check_condition_value(fdef.id, ref, cond.value)
            seen.add(fdef.id)

    @property
    def dimension(self) -> int:
        return sum(f.width for f in self.features)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.features)

    def feature_def(self, feature_id: str) -> FeatureDef:
        for fdef in self.features:
            if fdef.id == feature_id:
                return fdef
        raise UnknownFeature(f"feature {feature_id!r} is not in schema {self.version!r}")

    def slot_span(self, feature_id: str) -> tuple[int, int]:
        """Half-open [start, stop) slot range of a feature in encoded vectors."""
        offset = 0
        for fdef in self.features:
            if fdef.id == feature_id:
                return offset, offset + fdef.width
            offset += fdef.width
        raise UnknownFeature(f"feature {feature_id!r} is not in schema {self.version!r}")


def _check_condition_value(owner_id: str, ref: FeatureDef, value: Answer) -> None:
    if ref.kind == KIND_CATEGORICAL:
        if not isinstance(value, str) or value not in ref.values:
            raise MalformedSchema(
                f"feature {owner_id!r}: skip value {value!r} not in vocabulary of {ref.id!r}"
            )
    elif ref.kind == KIND_BOOLEAN:
        if not isinstance(value, bool):
            raise MalformedSchema(
                f"feature {owner_id!r}: skip value for boolean {ref.id!r} must be true/false"
            )
    else:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise MalformedSchema(
                f"feature {owner_id!r}: skip value for numeric {ref.id!r} must be a number"
            )


@dataclass
class SessionFeatures:
    """One session's validated answers keyed by feature id.

    A ``None`` value marks a non-required feature the user explicitly
    declined; it counts as answered for the question flow and encodes as
    zeros.  Values must have passed :func:`validate_answer`.
    """

    schema_version: str
    answers: dict[str, Optional[Answer]] = field(default_factory=dict)

    def set_answer(self, feature_id: str, value: Optional[Answer]) -> None:
        self.answers[feature_id] = value

    def copy(self) -> "SessionFeatures":
        return SessionFeatures(self.schema_version, dict(self.answers))


@dataclass(frozen=True)
class FeatureVector:
    """Dense encoded answer set; components lie in [0, 1] for encoder output."""

    values: tuple[float, ...]
    schema_version: str = ""

    @property
    def dimension(self) -> int:
        return len(self.values)


def validate_answer(fdef: FeatureDef, raw: object) -> Optional[Answer]:
    """Normalize a raw answer against its definition.

    Categorical answers match case-insensitively to the canonical value.
    Numeric answers must already lie within bounds (no clamping).  Boolean
    answers parse from common true/false words.  ``None`` is accepted as an
    explicit decline only for non-required features.
    """
    if raw is None:
        if fdef.required:
            raise TypeMismatch(f"feature {fdef.id!r} requires a {fdef.kind} answer")
        return None

    if fdef.kind == KIND_CATEGORICAL:
        if not isinstance(raw, str):
            raise TypeMismatch(f"feature {fdef.id!r} expects one of {list(fdef.values)}")
        needle = raw.strip().lower()
        for value in fdef.values:
            if value.lower() == needle:
                return value
        raise NotInVocabulary(
            f"{raw!r} is not an allowed value for {fdef.id!r}; choose from {list(fdef.values)}"
        )

    if fdef.kind == KIND_NUMERIC:
        if isinstance(raw, bool):
            raise TypeMismatch(f"feature {fdef.id!r} expects a number")
        if isinstance(raw, str):
            try:
                raw = float(raw.strip())
            except ValueError:
                raise TypeMismatch(f"feature {fdef.id!r} expects a number, got {raw!r}")
        if not isinstance(raw, (int, float)):
            raise TypeMismatch(f"feature {fdef.id!r} expects a number")
        value = float(raw)
        if value != value or not fdef.min_value <= value <= fdef.max_value:
            raise ValueOutOfRange(
                f"feature {fdef.id!r} must lie in [{fdef.min_value}, {fdef.max_value}]"
            )
        return value

    # boolean
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, str):
        word = raw.strip().lower()
        if word in _TRUE_WORDS:
            return True
        if word in _FALSE_WORDS:
            return False
    raise TypeMismatch(f"feature {fdef.id!r} expects yes/no")


def is_skipped(fdef: FeatureDef, answered: SessionFeatures) -> bool:
    return fdef.skip_condition is not None and fdef.skip_condition.holds(answered)


def next_question(schema: FeatureSchema, answered: SessionFeatures) -> Optional[FeatureDef]:
    """First unanswered, unskipped feature in schema order; ``None`` when done."""
    for fdef in schema.features:
        if fdef.id in answered.answers:
            continue
        if is_skipped(fdef, answered):
            continue
        return fdef
    return None


def encode(features: SessionFeatures, schema: FeatureSchema) -> FeatureVector:
    """Encode a completed answer set into a [0, 1] vector.

    One-hot for categoricals, min-max for numerics, 1.0/0.0 for booleans;
    skipped and declined features contribute all-zero slots.  Every
    non-skipped required feature must be answered.
    """
    if features.schema_version != schema.version:
        raise SchemaVersionMismatch(
            f"answers follow schema {features.schema_version!r}, expected {schema.version!r}"
        )
    out: list[float] = []
    for fdef in schema.features:
        raw = features.answers.get(fdef.id)
        if raw is None:
            if is_skipped(fdef, features) or not fdef.required:
                out.extend([0.0] * fdef.width)
                continue
            raise IncompleteFeatures(f"required feature {fdef.id!r} is unanswered")
        value = validate_answer(fdef, raw)  # re-check stored answers defensively
        if fdef.kind == KIND_CATEGORICAL:
            out.extend(1.0 if v == value else 0.0 for v in fdef.values)
        elif fdef.kind == KIND_NUMERIC:
            out.append((float(value) - fdef.min_value) / (fdef.max_value - fdef.min_value))
        else:
            out.append(1.0 if value else 0.0)
    return FeatureVector(tuple(out), schema.version)


# --- schema loading ---------------------------------------------------------

def parse_schema(document: object, source: str = "<schema>") -> FeatureSchema:
    """Build a schema from a parsed JSON document, with path diagnostics."""
    if not isinstance(document, dict):
        raise MalformedSchema(f"{source}: top level must be an object")
    version = document.get("version")
    if not isinstance(version, str) or not version:
        raise MalformedSchema(f"{source}: 'version' must be a non-empty string")
    raw_features = document.get("features")
    if not isinstance(raw_features, list) or not raw_features:
        raise MalformedSchema(f"{source}: 'features' must be a non-empty array")

    defs: list[FeatureDef] = []
    for i, item in enumerate(raw_features):
        where = f"{source}: features[{i}]"
        if not isinstance(item, dict):
            raise MalformedSchema(f"{where}: must be an object")
        try:
            defs.append(_parse_feature(item, where))
        except MalformedSchema:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedSchema(f"{where}: {exc}") from exc
    try:
        return FeatureSchema(version=version, features=tuple(defs))
    except MalformedSchema as exc:
        raise MalformedSchema(f"{source}: {exc.message}") from exc


def _parse_feature(item: Mapping, where: str) -> FeatureDef:
    fid = item.get("id")
    if not isinstance(fid, str) or not fid:
        raise MalformedSchema(f"{where}.id: must be a non-empty string")
    prompt = item.get("prompt")
    if not isinstance(prompt, str) or not prompt:
        raise MalformedSchema(f"{where}.prompt: must be a non-empty string")
    kind = item.get("kind")
    if kind not in KINDS:
        raise MalformedSchema(f"{where}.kind: expected one of {list(KINDS)}, got {kind!r}")

    values: tuple[str, ...] = ()
    min_value = max_value = 0.0
    if kind == KIND_CATEGORICAL:
        raw_values = item.get("values")
        if (not isinstance(raw_values, list)
                or not all(isinstance(v, str) and v for v in raw_values)):
            raise MalformedSchema(f"{where}.values: must be an array of non-empty strings")
        values = tuple(raw_values)
    elif kind == KIND_NUMERIC:
        for key in ("min", "max"):
            bound = item.get(key)
            if isinstance(bound, bool) or not isinstance(bound, (int, float)):
                raise MalformedSchema(f"{where}.{key}: must be a number")
        min_value, max_value = float(item["min"]), float(item["max"])

    cond = None
    raw_cond = item.get("skip_condition")
    if raw_cond is not None:
        if not isinstance(raw_cond, dict):
            raise MalformedSchema(f"{where}.skip_condition: must be an object")
        ref = raw_cond.get("feature")
        op = raw_cond.get("op")
        if not isinstance(ref, str) or not isinstance(op, str):
            raise MalformedSchema(
                f"{where}.skip_condition: needs string 'feature' and 'op' fields"
            )
        if "value" not in raw_cond:
            raise MalformedSchema(f"{where}.skip_condition: missing 'value'")
        value = raw_cond["value"]
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = float(value)
        cond = SkipCondition(feature_id=ref, op=op, value=value)

    required = item.get("required", True)
    if not isinstance(required, bool):
        raise MalformedSchema(f"{where}.required: must be a boolean")

    return FeatureDef(
        id=fid, prompt=prompt, kind=kind, values=values,
        min_value=min_value, max_value=max_value,
        skip_condition=cond, required=required,
    )


def load_schema(path: str | Path) -> FeatureSchema:
    """Load and validate a schema JSON file; diagnostics carry line/path info."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedSchema(f"{path}: cannot read schema file: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedSchema(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_schema(document, source=str(path))


def default_schema_path() -> Path:
    return Path(__file__).parent / "data" / "default_schema.json"


def load_default_schema() -> FeatureSchema:
    return load_schema(default_schema_path())


def question_payload(fdef: FeatureDef) -> dict:
    """Wire representation of one question, as served to chat clients."""
    payload: dict = {
        "feature_id": fdef.id,
        "prompt": fdef.prompt,
        "kind": fdef.kind,
        "required": fdef.required,
    }
    if fdef.kind == KIND_CATEGORICAL:
        payload["values"] = list(fdef.values)
    elif fdef.kind == KIND_NUMERIC:
        payload["min"] = fdef.min_value
        payload["max"] = fdef.max_value
    return payload


def iter_flow(schema: FeatureSchema, answered: SessionFeatures) -> Iterator[FeatureDef]:
    """Yield remaining questions if every one were answered in turn (test helper)."""
    probe = answered.copy()
    while True:
        nxt = next_question(schema, probe)
        if nxt is None:
            return
        yield nxt
        probe.set_answer(nxt.id, _neutral_answer(nxt))


def _neutral_answer(fdef: FeatureDef) -> Answer:
    if fdef.kind == KIND_CATEGORICAL:
        return fdef.values[0]
    if fdef.kind == KIND_NUMERIC:
        return fdef.min_value
    return False
