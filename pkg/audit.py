"""Assessor-facing case validation and exchange-file export/import.

Validation rules (errors unless noted):

    V1  claim tree below the root is acyclic and every subclaim resolves
    V2  every leaf claim holds at least one evidence with a conclusion
    V3  every refined claim states its strategy
    V4  every evidence realization has been documented
    V5  evidence under one claim mixes data/model versions (warning)
    V6  no dangling or mistyped reference anywhere in the case

Exports are refused while any error is present.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from ac_model import AcElement, Blueprint, Claim, Measure, Realization, latest_conclusion
from config import LOGGER
from database import store
from errors import AcForgeError, AlreadyExistsError, ElementError, KindMismatchError, NotFoundError, ValidationFailedError
from helper_func import canonical_json, now_epoch

logger = LOGGER(__name__)

EXCHANGE_FORMAT = "acx"
EXCHANGE_SCHEMA = 1


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


class ExportMode(str, enum.Enum):
    EVIDENCE_ONLY = "evidence_only"
    SUBTREE = "subtree"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    rule: str
    element_id: str
    message: str

    def __str__(self):
        return f"{self.severity.value.upper()} {self.rule} {self.element_id}: {self.message}"


def _error(rule, element_id, message) -> Finding:
    return Finding(Severity.ERROR, rule, element_id, message)


def _claim_tree(index: dict, root_id: str, findings: list) -> list:
    """Claims reachable from the root in subclaim order; V1 problems are appended to findings."""
    order, seen = [], set()

    def visit(claim: Claim, path: tuple):
        seen.add(claim.id)
        order.append(claim)
        for sub_id in claim.subclaim_ids:
            sub = index.get(sub_id)
            if sub is None:
                findings.append(_error("V1", claim.id, f"subclaim {sub_id} does not resolve"))
            elif not isinstance(sub, Claim):
                findings.append(_error("V1", claim.id, f"subclaim {sub_id} is a {sub.kind.value}, not a claim"))
            elif sub_id in path:
                findings.append(_error("V1", claim.id, f"subclaim {sub_id} closes a cycle"))
            elif sub_id in seen:
                findings.append(_error("V1", claim.id, f"subclaim {sub_id} is already refined elsewhere in the tree"))
            else:
                visit(sub, path + (sub_id,))

    visit(index[root_id], (root_id,))
    return order


_TYPED_REFS = (
    (Claim, "measure_ids", Measure),
    (Claim, "evidence_ids", Realization),
    (Measure, "blueprint_ids", Blueprint),
    (Blueprint, "realized_measure_id", Measure),
    (Realization, "blueprint_id", Blueprint),
)


def _reference_findings(index: dict, tree_ids: set) -> list:
    findings = []
    for element in index.values():
        checks = list(_TYPED_REFS)
        if isinstance(element, Claim) and element.id not in tree_ids:
            checks.append((Claim, "subclaim_ids", Claim))
        for owner, attribute, expected in checks:
            if not isinstance(element, owner):
                continue
            refs = getattr(element, attribute)
            for ref in [refs] if isinstance(refs, str) else refs:
                target = index.get(ref)
                if target is None:
                    findings.append(_error("V6", element.id, f"{attribute} refers to unknown id {ref}"))
                elif not isinstance(target, expected):
                    findings.append(_error(
                        "V6", element.id, f"{attribute} refers to {ref}, a {target.kind.value}, "
                                          f"expected a {expected.kind.value}"
                    ))
        if isinstance(element, Blueprint):
            measure = index.get(element.realized_measure_id)
            if isinstance(measure, Measure) and element.id not in measure.blueprint_ids:
                findings.append(_error(
                    "V6", element.id, f"measure {measure.id} does not list this blueprint"
                ))
    return findings


def validate_case(case, root_id: str, index: Optional[dict] = None) -> list:
    """Check the claim tree below `root_id` and the whole case; an empty list means the case passes."""
    index = store.index(case) if index is None else index
    root = index.get(root_id)
    if root is None:
        raise NotFoundError(f"no element with id {root_id!r} in {case.root}")
    if not isinstance(root, Claim):
        raise KindMismatchError(f"{root_id} is a {root.kind.value}, not a claim")

    findings = []
    tree = _claim_tree(index, root_id, findings)
    for claim in tree:
        if claim.subclaim_ids:
            if not (claim.strategy or "").strip():
                findings.append(_error("V3", claim.id, "refined claim has no strategy"))
            continue
        evidence = [index[e] for e in claim.evidence_ids if isinstance(index.get(e), Realization)]
        if not any(r.conclusions for r in evidence):
            findings.append(_error("V2", claim.id, "leaf claim has no evidence with a conclusion"))
        for realization in evidence:
            if not realization.documentation:
                findings.append(_error("V4", realization.id, f"evidence for {claim.id} has no documentation"))
        versions = sorted({r.data_model_version for r in evidence})
        if len(versions) > 1:
            findings.append(Finding(
                Severity.WARNING, "V5", claim.id, f"evidence mixes data/model versions {', '.join(versions)}"
            ))
    findings.extend(_reference_findings(index, {c.id for c in tree}))
    findings = sorted(set(findings), key=lambda f: (f.rule, f.element_id, f.message))
    logger.info(
        f"Validated {root_id}: {sum(f.severity is Severity.ERROR for f in findings)} error(s), "
        f"{sum(f.severity is Severity.WARNING for f in findings)} warning(s)"
    )
    return findings


def errors_only(findings) -> list:
    return [f for f in findings if f.severity is Severity.ERROR]


# ---------------- EXCHANGE ---------------- #

@dataclass(frozen=True)
class ExchangeDocument:
    mode: ExportMode
    root_id: str
    exported_at: int
    evidence: tuple
    claims: Optional[dict] = None
    catalog: Optional[dict] = None

    def to_dict(self) -> dict:
        payload = {
            "schema": EXCHANGE_SCHEMA,
            "format": EXCHANGE_FORMAT,
            "mode": self.mode.value,
            "exported_at": self.exported_at,
            "root_id": self.root_id,
            "evidence": list(self.evidence),
        }
        if self.mode is ExportMode.SUBTREE:
            payload["claims"] = self.claims
            payload["catalog"] = self.catalog
        return payload

    def serialize(self) -> str:
        return canonical_json(self.to_dict())

    @property
    def depth(self) -> int:
        def levels(node):
            return 1 + max((levels(sub) for sub in node.get("subclaims", [])), default=0)
        return levels(self.claims) if self.claims else 0


def _evidence_record(claim: Claim, realization: Realization) -> dict:
    latest = latest_conclusion(realization)
    return {
        "claim_id": claim.id,
        "realization_id": realization.id,
        "blueprint_id": realization.blueprint_id,
        "conclusion": latest.text if latest else None,
        "data_model_version": realization.data_model_version,
        "documentation": [record.path for record in realization.documentation],
    }


def _nested(claim: Claim, index: dict) -> dict:
    node = claim.to_dict()
    node["subclaims"] = [_nested(index[sub_id], index) for sub_id in claim.subclaim_ids]
    return node


def _catalog(tree: list, index: dict) -> dict:
    """Measures, blueprints and realizations the exported claims depend on, closed under references."""
    pending = [ref for claim in tree for ref in claim.measure_ids + claim.evidence_ids]
    found = {}
    while pending:
        ref = pending.pop()
        if ref in found or not isinstance(index.get(ref), (Measure, Blueprint, Realization)):
            continue
        element = index[ref]
        found[ref] = element
        pending.extend(element.references())
    grouped = {"measures": [], "blueprints": [], "realizations": []}
    keys = {Measure: "measures", Blueprint: "blueprints", Realization: "realizations"}
    for element_id in sorted(found):
        grouped[keys[type(found[element_id])]].append(found[element_id].to_dict())
    return grouped


def export_case(case, root_id: str, mode: Union[str, ExportMode], at: Optional[int] = None,
                out: Optional[Union[str, Path]] = None) -> tuple:
    """Build (and optionally write) the exchange document for the tree below `root_id`."""
    try:
        mode = ExportMode(mode)
    except ValueError:
        raise AcForgeError(f"unknown export mode {mode!r}; use evidence_only or subtree")
    index = store.index(case)
    findings = validate_case(case, root_id, index)
    blocking = errors_only(findings)
    if blocking:
        logger.warning(f"Export of {root_id} refused: {len(blocking)} validation error(s)")
        raise ValidationFailedError(blocking)

    tree = _claim_tree(index, root_id, [])
    evidence = tuple(
        _evidence_record(claim, index[e])
        for claim in tree if not claim.subclaim_ids
        for e in claim.evidence_ids
    )
    document = ExchangeDocument(
        mode=mode,
        root_id=root_id,
        exported_at=now_epoch(at),
        evidence=evidence,
        claims=_nested(index[root_id], index) if mode is ExportMode.SUBTREE else None,
        catalog=_catalog(tree, index) if mode is ExportMode.SUBTREE else None,
    )
    text = document.serialize()
    if out is not None:
        store.atomic_write(Path(out), text)
        logger.info(f"Exported {root_id} ({mode.value}) to {out}")
    return document, text


def _flatten(node: dict) -> list:
    node = dict(node)
    subclaims = node.pop("subclaims", [])
    return [node] + [record for sub in subclaims for record in _flatten(sub)]


def import_subtree(case, document: Union[dict, ExchangeDocument]) -> list:
    """Recreate the claims, catalog elements and evidence of a subtree export.

    Nothing is written unless every id is free in the target case.
    """
    payload = document.to_dict() if isinstance(document, ExchangeDocument) else document
    if not isinstance(payload, dict) or payload.get("format") != EXCHANGE_FORMAT or payload.get("schema") != EXCHANGE_SCHEMA:
        raise ElementError("not an acx schema 1 exchange document")
    if payload.get("mode") != ExportMode.SUBTREE.value or not payload.get("claims"):
        raise ElementError("only subtree exports carry the claim structure needed for import")
    catalog = payload.get("catalog") or {}
    records = (
        list(catalog.get("measures", [])) + list(catalog.get("blueprints", []))
        + list(catalog.get("realizations", [])) + _flatten(payload["claims"])
    )
    elements = [AcElement.from_dict(record) for record in records]
    taken = sorted(e.id for e in elements if store.exists(case, e.id))
    if taken:
        raise AlreadyExistsError(f"cannot import: id(s) already in the case: {', '.join(taken)}")
    for element in elements:
        element.check(strict=True)
    for element in elements:
        store.save(case, element, check_refs=False)
    logger.info(f"Imported {len(elements)} element(s) below {payload.get('root_id')}")
    return [e.id for e in elements]
