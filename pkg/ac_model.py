"""In-memory assurance-case model.

Claims, measures and blueprints are AC elements; a realization is a blueprint
applied to one data/model version and is the unit of evidence. All element
kinds share identity, versioning, documentation records and summarization.
Operations return updated copies; nothing here touches the filesystem.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import ClassVar, Mapping, Optional

from errors import ElementError, LinkError
from helper_func import check_id, format_timestamp, now_epoch

SCHEMA_VERSION = 1


class ElementKind(str, enum.Enum):
    CLAIM = "claim"
    MEASURE = "measure"
    BLUEPRINT = "blueprint"
    REALIZATION = "realization"


class LifecyclePhase(str, enum.Enum):
    SPECIFICATION = "specification"
    CONSTRUCTION = "construction"
    ANALYSIS = "analysis"
    TESTING = "testing"
    OPERATION = "operation"


class Characteristic(str, enum.Enum):
    UNSEEN = "unseen"
    REPRESENTATIVE = "representative"
    CORRECT_RELATION = "correct_relation"
    OTHER = "other"


class Relation(str, enum.Enum):
    CLAIM_MEASURE = "claim_measure"
    MEASURE_BLUEPRINT = "measure_blueprint"
    CLAIM_EVIDENCE = "claim_evidence"


class DocFormat(str, enum.Enum):
    HTML = "html"
    MARKDOWN = "markdown"


class StepStatus(str, enum.Enum):
    EXECUTED = "executed"
    MANUAL = "manual"
    SKIPPED = "skipped"


def _enum(enum_cls, value, what: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(member.value for member in enum_cls)
        raise ElementError(f"{what} must be one of {allowed}, got {value!r}")


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


# ---------------- VALUE TYPES ---------------- #

@dataclass(frozen=True)
class Conclusion:
    text: str
    timestamp: int

    def __post_init__(self):
        if not isinstance(self.text, str) or not self.text.strip():
            raise ElementError("conclusion text must not be empty")
        if int(self.timestamp) < 0:
            raise ElementError("conclusion timestamp must be >= 0")

    @classmethod
    def from_dict(cls, data: Mapping) -> "Conclusion":
        return cls(text=data["text"], timestamp=int(data["timestamp"]))


@dataclass(frozen=True)
class DocumentationRecord:
    timestamp: int
    rendered_datetime: str
    data_model_version: str
    format: DocFormat
    path: str
    utc_offset_minutes: int = 0

    def __post_init__(self):
        object.__setattr__(self, "format", _enum(DocFormat, self.format, "documentation format"))

    @classmethod
    def create(cls, timestamp: int, data_model_version: str, fmt, path: str,
               utc_offset_minutes: int = 0) -> "DocumentationRecord":
        return cls(
            timestamp=int(timestamp),
            rendered_datetime=format_timestamp(timestamp, utc_offset_minutes),
            data_model_version=data_model_version,
            format=fmt,
            path=path,
            utc_offset_minutes=utc_offset_minutes,
        )

    def check(self) -> None:
        if self.rendered_datetime != format_timestamp(self.timestamp, self.utc_offset_minutes):
            raise ElementError(
                f"documentation record {self.timestamp}: rendered datetime "
                f"{self.rendered_datetime!r} does not match its timestamp"
            )
        if not self.path:
            raise ElementError(f"documentation record {self.timestamp} has no path")

    @classmethod
    def from_dict(cls, data: Mapping) -> "DocumentationRecord":
        return cls(
            timestamp=int(data["timestamp"]),
            rendered_datetime=data["rendered_datetime"],
            data_model_version=data.get("data_model_version", ""),
            format=data["format"],
            path=data["path"],
            utc_offset_minutes=int(data.get("utc_offset_minutes", 0)),
        )


@dataclass(frozen=True)
class TechniqueInvocation:
    name: str
    parameters: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping) -> "TechniqueInvocation":
        return cls(name=data["name"], parameters=dict(data.get("parameters") or {}))


@dataclass(frozen=True)
class Step:
    title: str
    description: str = ""
    technique: Optional[TechniqueInvocation] = None
    output_refs: list = field(default_factory=list)

    def __post_init__(self):
        if not isinstance(self.title, str) or not self.title.strip():
            raise ElementError("step titles must not be empty")

    @classmethod
    def from_dict(cls, data: Mapping) -> "Step":
        technique = data.get("technique")
        return cls(
            title=data.get("title", ""),
            description=data.get("description", ""),
            technique=TechniqueInvocation.from_dict(technique) if technique else None,
            output_refs=list(data.get("output_refs") or []),
        )


# ---------------- ELEMENTS ---------------- #

@dataclass(kw_only=True)
class AcElement:
    kind: ClassVar[ElementKind]

    id: str
    name: str = ""
    description: str = ""
    element_version: int = 0
    version_history: list = field(default_factory=list)
    documentation: list = field(default_factory=list)

    def references(self) -> set:
        """Ids of other stored items this element points at."""
        return set()

    def versions(self) -> list:
        return list(self.version_history) or [self.element_version]

    def check(self, strict: bool = True) -> None:
        check_id(self.id)
        if int(self.element_version) <= 0:
            raise ElementError(f"{self.id}: element version must be > 0")
        history = list(self.version_history)
        if any(b <= a for a, b in zip(history, history[1:])):
            raise ElementError(f"{self.id}: version history is not strictly increasing")
        stamps = [record.timestamp for record in self.documentation]
        if stamps != sorted(stamps) or len(set(stamps)) != len(stamps):
            raise ElementError(f"{self.id}: documentation records must be unique and ascending")
        for record in self.documentation:
            record.check()
        for ref in self.references():
            check_id(ref, what="reference")

    def to_dict(self) -> dict:
        payload = {"schema": SCHEMA_VERSION, "kind": self.kind.value}
        payload.update(_plain(self))
        return payload

    @classmethod
    def _parse_fields(cls, data: dict) -> dict:
        data["documentation"] = [DocumentationRecord.from_dict(d) for d in data.get("documentation", [])]
        return data

    @classmethod
    def from_dict(cls, payload: Mapping) -> "AcElement":
        data = dict(payload)
        schema = data.pop("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ElementError(f"unsupported schema version {schema!r}")
        kind = data.pop("kind", cls.kind.value if hasattr(cls, "kind") else None)
        target = ELEMENT_CLASSES.get(_enum(ElementKind, kind, "kind"))
        if cls is not AcElement and target is not cls:
            raise ElementError(f"payload kind {kind!r} is not a {cls.kind.value}")
        try:
            return target(**target._parse_fields(data))
        except (TypeError, KeyError) as e:
            raise ElementError(f"malformed {kind} payload: {e}")


@dataclass(kw_only=True)
class Claim(AcElement):
    kind: ClassVar[ElementKind] = ElementKind.CLAIM

    statement: str
    strategy: Optional[str] = None
    subclaim_ids: list = field(default_factory=list)
    contexts: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)
    measure_ids: list = field(default_factory=list)
    evidence_ids: list = field(default_factory=list)
    conclusions: list = field(default_factory=list)
    risk_criterion: Optional[str] = None

    @property
    def is_inner(self) -> bool:
        return bool(self.subclaim_ids)

    def references(self) -> set:
        return set(self.subclaim_ids) | set(self.measure_ids) | set(self.evidence_ids)

    def check(self, strict: bool = True) -> None:
        super().check(strict)
        if not self.statement or not self.statement.strip():
            raise ElementError(f"claim {self.id}: statement must not be empty")
        if len(set(self.subclaim_ids)) != len(self.subclaim_ids):
            raise ElementError(f"claim {self.id}: duplicate subclaim id")
        if self.id in self.subclaim_ids:
            raise ElementError(f"claim {self.id}: a claim cannot be its own subclaim")
        if self.subclaim_ids and self.evidence_ids:
            raise ElementError(f"claim {self.id}: a claim is either refined or holds evidence, not both")
        if strict and self.subclaim_ids and not (self.strategy or "").strip():
            raise ElementError(f"claim {self.id}: refined claims need a strategy")
        for ids in (self.measure_ids, self.evidence_ids):
            if len(set(ids)) != len(ids):
                raise ElementError(f"claim {self.id}: duplicate reference")

    @classmethod
    def _parse_fields(cls, data: dict) -> dict:
        data = super()._parse_fields(data)
        data["conclusions"] = [Conclusion.from_dict(c) for c in data.get("conclusions", [])]
        return data


@dataclass(kw_only=True)
class Measure(AcElement):
    kind: ClassVar[ElementKind] = ElementKind.MEASURE

    lifecycle_phase: LifecyclePhase
    addressed_characteristic: Characteristic
    blueprint_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.lifecycle_phase = _enum(LifecyclePhase, self.lifecycle_phase, "lifecycle_phase")
        self.addressed_characteristic = _enum(
            Characteristic, self.addressed_characteristic, "addressed_characteristic"
        )

    def references(self) -> set:
        return set(self.blueprint_ids)

    def check(self, strict: bool = True) -> None:
        super().check(strict)
        if len(set(self.blueprint_ids)) != len(self.blueprint_ids):
            raise ElementError(f"measure {self.id}: duplicate blueprint id")


@dataclass(kw_only=True)
class Blueprint(AcElement):
    kind: ClassVar[ElementKind] = ElementKind.BLUEPRINT

    realized_measure_id: str
    justification: str = ""
    steps: list = field(default_factory=list)

    def references(self) -> set:
        return {self.realized_measure_id}

    def check(self, strict: bool = True) -> None:
        super().check(strict)
        titles = [step.title for step in self.steps]
        if len(set(titles)) != len(titles):
            raise ElementError(f"blueprint {self.id}: step titles must be unique")

    @classmethod
    def _parse_fields(cls, data: dict) -> dict:
        data = super()._parse_fields(data)
        data["steps"] = [Step.from_dict(s) for s in data.get("steps", [])]
        return data


@dataclass(kw_only=True)
class Realization(AcElement):
    kind: ClassVar[ElementKind] = ElementKind.REALIZATION

    blueprint_id: str
    data_model_version: str
    parameter_bindings: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    conclusions: list = field(default_factory=list)
    step_status: dict = field(default_factory=dict)

    @property
    def realization_id(self) -> str:
        return self.id

    def references(self) -> set:
        return {self.blueprint_id}

    def check(self, strict: bool = True) -> None:
        super().check(strict)
        if not self.data_model_version or not self.data_model_version.strip():
            raise ElementError(f"realization {self.id}: data/model version must not be empty")
        for title, status in self.step_status.items():
            _enum(StepStatus, status, f"status of step {title!r}")

    @classmethod
    def _parse_fields(cls, data: dict) -> dict:
        data = super()._parse_fields(data)
        data["conclusions"] = [Conclusion.from_dict(c) for c in data.get("conclusions", [])]
        return data


ELEMENT_CLASSES = {
    ElementKind.CLAIM: Claim,
    ElementKind.MEASURE: Measure,
    ElementKind.BLUEPRINT: Blueprint,
    ElementKind.REALIZATION: Realization,
}

REQUIRED_FIELDS = {
    ElementKind.CLAIM: ("id", "statement"),
    ElementKind.MEASURE: ("id", "name", "lifecycle_phase", "addressed_characteristic"),
    ElementKind.BLUEPRINT: ("id", "name", "realized_measure_id"),
    ElementKind.REALIZATION: ("id", "blueprint_id", "data_model_version"),
}

FIELD_ALIASES = {
    "realized_measure": "realized_measure_id",
    "realization_id": "id",
}


# ---------------- OPERATIONS ---------------- #

def create_element(kind, fields: Mapping, now: Optional[int] = None, existing_ids=()) -> AcElement:
    """Build a new, not yet persisted element stamped with the current version."""
    try:
        kind = ElementKind(kind)
    except ValueError:
        raise ElementError(f"unknown element kind {kind!r}")
    data = {FIELD_ALIASES.get(k, k): v for k, v in dict(fields).items()}
    check_id(data.get("id"))
    if data["id"] in set(existing_ids):
        raise ElementError(f"id {data['id']!r} already exists in this case")
    missing = [name for name in REQUIRED_FIELDS[kind] if data.get(name) in (None, "")]
    if missing:
        raise ElementError(f"{kind.value} {data['id']}: missing required field(s) {', '.join(missing)}")
    if kind is ElementKind.BLUEPRINT:
        data["steps"] = [s if isinstance(s, Step) else Step.from_dict(s) for s in data.get("steps", [])]
    data.setdefault("name", data["id"])
    data["element_version"] = now_epoch(now)
    data["version_history"] = []
    cls = ELEMENT_CLASSES[kind]
    try:
        element = cls(**data)
    except TypeError as e:
        raise ElementError(f"{kind.value} {data['id']}: {e}")
    element.check(strict=True)
    return element


def _touch(element: AcElement, now: Optional[int], **changes) -> AcElement:
    changes["element_version"] = max(now_epoch(now), element.element_version)
    return dataclasses.replace(element, **changes)


def refine_claim(claim: Claim, strategy: str, subclaim_ids, now: Optional[int] = None) -> Claim:
    """Turn a claim into an inner node refined by `strategy` into `subclaim_ids`."""
    if not isinstance(claim, Claim):
        raise ElementError(f"{claim.id} is a {claim.kind.value}, only claims can be refined")
    if claim.evidence_ids:
        raise ElementError(f"claim {claim.id} already holds evidence and cannot be refined")
    subclaim_ids = list(subclaim_ids)
    if not subclaim_ids:
        raise ElementError(f"claim {claim.id}: refinement needs at least one subclaim")
    if not strategy or not strategy.strip():
        raise ElementError(f"claim {claim.id}: refinement needs a strategy")
    for sub_id in subclaim_ids:
        check_id(sub_id, what="subclaim id")
    if len(set(subclaim_ids)) != len(subclaim_ids):
        raise ElementError(f"claim {claim.id}: duplicate subclaim id")
    if claim.id in subclaim_ids:
        raise ElementError(f"claim {claim.id}: a claim cannot be its own subclaim")
    return _touch(claim, now, strategy=strategy, subclaim_ids=subclaim_ids)


_RELATION_KINDS = {
    Relation.CLAIM_MEASURE: (Claim, Measure, "measure_ids"),
    Relation.MEASURE_BLUEPRINT: (Measure, Blueprint, "blueprint_ids"),
    Relation.CLAIM_EVIDENCE: (Claim, Realization, "evidence_ids"),
}


def link(index: Mapping[str, AcElement], from_id: str, relation, to_id: str,
         now: Optional[int] = None) -> AcElement:
    """Append a reference from one element to another; repeating a link is a no-op."""
    try:
        relation = Relation(relation)
    except ValueError:
        raise LinkError(f"unknown relation {relation!r}")
    source, target = index.get(from_id), index.get(to_id)
    if source is None or target is None:
        missing = from_id if source is None else to_id
        raise LinkError(f"unresolved id {missing!r}")
    source_cls, target_cls, attribute = _RELATION_KINDS[relation]
    if not isinstance(source, source_cls) or not isinstance(target, target_cls):
        raise LinkError(
            f"{relation.value} links a {source_cls.kind.value} to a {target_cls.kind.value}, "
            f"got {source.kind.value} -> {target.kind.value}"
        )
    if relation is Relation.CLAIM_EVIDENCE:
        if source.subclaim_ids:
            raise LinkError(f"claim {from_id} is refined; evidence attaches to leaf claims only")
        if not target.conclusions:
            raise LinkError(f"realization {to_id} has no conclusion and cannot serve as evidence")
    current = list(getattr(source, attribute))
    if to_id in current:
        return source
    return _touch(source, now, **{attribute: current + [to_id]})


def add_conclusion(target, text: str, timestamp: int):
    """Append a conclusion to a claim or realization, keeping them ordered by time."""
    if not isinstance(target, (Claim, Realization)):
        raise ElementError(f"{target.kind.value} {target.id} does not take conclusions")
    conclusion = Conclusion(text=text, timestamp=int(timestamp))
    ordered = sorted(list(target.conclusions) + [conclusion], key=lambda c: c.timestamp)
    return dataclasses.replace(target, conclusions=ordered)


def latest_conclusion(target) -> Optional[Conclusion]:
    conclusions = getattr(target, "conclusions", None) or []
    return conclusions[-1] if conclusions else None


@dataclass(frozen=True)
class DocumentationRow:
    timestamp: int
    rendered_datetime: str
    data_model_version: str
    format: str
    path: str


@dataclass(frozen=True)
class Summary:
    id: str
    kind: str
    name: str
    description: str
    details: tuple
    refs: tuple
    element_versions: tuple
    documentation: tuple
    latest_conclusion: Optional[Conclusion]


def summarize(element: AcElement, index: Optional[Mapping[str, AcElement]] = None,
              utc_offset_minutes: int = 0) -> Summary:
    """Read-only overview of an element, as shown at the top of its documentation."""
    index = index or {}
    details = []
    refs = []
    if isinstance(element, Claim):
        details = [
            ("Statement", element.statement),
            ("Strategy", element.strategy or ""),
            ("Risk criterion", element.risk_criterion or ""),
            ("Contexts", "; ".join(element.contexts)),
            ("Assumptions", "; ".join(element.assumptions)),
        ]
        refs = [
            ("Subclaims", tuple(element.subclaim_ids)),
            ("Measures", tuple(element.measure_ids)),
            ("Evidence", tuple(element.evidence_ids)),
        ]
    elif isinstance(element, Measure):
        details = [
            ("Lifecycle phase", element.lifecycle_phase.value),
            ("Addressed characteristic", element.addressed_characteristic.value),
        ]
        refs = [("Blueprints", tuple(element.blueprint_ids))]
    elif isinstance(element, Blueprint):
        measure = index.get(element.realized_measure_id)
        details = [
            ("Realized measure", measure.name if measure else element.realized_measure_id),
            ("Justification", element.justification),
        ]
        refs = [
            ("Measure", (element.realized_measure_id,)),
            ("Steps", tuple(step.title for step in element.steps)),
        ]
    elif isinstance(element, Realization):
        blueprint = index.get(element.blueprint_id)
        measure = index.get(blueprint.realized_measure_id) if isinstance(blueprint, Blueprint) else None
        details = [
            ("Realized measure", measure.name if measure else
                (blueprint.realized_measure_id if isinstance(blueprint, Blueprint) else "")),
            ("Data/model version", element.data_model_version),
        ]
        refs = [
            ("Blueprint", (element.blueprint_id,)),
            ("Artifacts", tuple(sorted(element.artifacts))),
        ]
    rows = tuple(
        DocumentationRow(
            timestamp=record.timestamp,
            rendered_datetime=format_timestamp(record.timestamp, utc_offset_minutes),
            data_model_version=record.data_model_version,
            format=record.format.value,
            path=record.path,
        )
        for record in sorted(element.documentation, key=lambda r: r.timestamp)
    )
    return Summary(
        id=element.id,
        kind=element.kind.value,
        name=element.name,
        description=element.description or getattr(element, "statement", ""),
        details=tuple(details),
        refs=tuple(refs),
        element_versions=tuple(element.versions()),
        documentation=rows,
        latest_conclusion=latest_conclusion(element),
    )
