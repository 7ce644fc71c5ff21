import json
import os

import numpy as np
import pytest

from ac_model import Conclusion, DocumentationRecord, ElementKind, Step, TechniqueInvocation, create_element
from database import store
from errors import (
    AlreadyExistsError,
    CaseLockedError,
    DuplicateTimestampError,
    InvariantViolationError,
    KindMismatchError,
    NotFoundError,
    StillReferencedError,
    StoreError,
)
from helper_func import coerce_value, format_timestamp, parse_timestamp

WORDS = ["stop", "sign", "label", "noise", "test", "data", "scope", "model", "lane", "night"]


def _text(rng, n=4):
    return " ".join(rng.choice(WORDS, size=n))


def _docs(rng):
    stamps = sorted({int(s) for s in rng.integers(1_600_000_000, 1_700_000_000, size=rng.integers(0, 4))})
    return [
        DocumentationRecord.create(s, f"v{rng.integers(2020, 2025)}-0{rng.integers(1, 9)}",
                                   rng.choice(["html", "markdown"]), f"docs/x/{s}.html",
                                   int(rng.integers(-840, 841)))
        for s in stamps
    ]


def _conclusions(rng):
    return sorted((Conclusion(_text(rng, 6), int(t)) for t in rng.integers(1, 10**9, size=rng.integers(0, 3))),
                  key=lambda c: c.timestamp)


def random_element(kind: ElementKind, rng, i: int):
    element_id = f"{kind.value[0]}{i}-{rng.integers(0, 10**6)}"
    fields = {"id": element_id, "name": _text(rng, 2), "description": _text(rng)}
    if kind is ElementKind.CLAIM:
        refined = bool(rng.integers(0, 2))
        fields.update(
            statement=_text(rng, 8),
            strategy=_text(rng, 3) if refined else None,
            subclaim_ids=[f"sub{j}" for j in range(rng.integers(1, 4))] if refined else [],
            evidence_ids=[] if refined else [f"ev{j}" for j in range(rng.integers(0, 3))],
            measure_ids=[f"m{j}" for j in range(rng.integers(0, 3))],
            contexts=[_text(rng) for _ in range(rng.integers(0, 3))],
            assumptions=[_text(rng) for _ in range(rng.integers(0, 2))],
            risk_criterion=rng.choice(["ALARP", None]),
        )
    elif kind is ElementKind.MEASURE:
        fields.update(
            lifecycle_phase=rng.choice(["specification", "construction", "analysis", "testing", "operation"]),
            addressed_characteristic=rng.choice(["unseen", "representative", "correct_relation", "other"]),
            blueprint_ids=[f"bp{j}" for j in range(rng.integers(0, 3))],
        )
    elif kind is ElementKind.BLUEPRINT:
        fields.update(
            realized_measure_id="m0",
            justification=_text(rng, 10),
            steps=[
                Step(title=f"Step {j} {_text(rng, 2)}", description=_text(rng),
                     technique=TechniqueInvocation("isolation_forest", {"n_trees": int(rng.integers(1, 200)),
                                                                        "exclude": _text(rng, 1)})
                     if rng.integers(0, 2) else None,
                     output_refs=["outlier_scores.csv"])
                for j in range(rng.integers(0, 4))
            ],
        )
    else:
        fields.update(
            blueprint_id="bp0",
            data_model_version=f"v{rng.integers(2020, 2025)}-07",
            parameter_bindings={"Step 1": {"psi": int(rng.integers(2, 512)), "threshold": float(rng.random())}},
            artifacts={"overlap.json": "artifacts/r/overlap.json"},
            step_status={"Step 1": rng.choice(["executed", "manual", "skipped"])},
        )
    element = create_element(kind, fields, now=int(rng.integers(1_600_000_000, 1_700_000_000)))
    element.documentation = _docs(rng)
    if kind in (ElementKind.CLAIM, ElementKind.REALIZATION):
        element.conclusions = _conclusions(rng)
    return element


@pytest.mark.parametrize("kind", list(ElementKind))
def test_save_load_round_trip(case, kind):
    rng = np.random.default_rng(1000 + list(ElementKind).index(kind))
    for i in range(100):
        element = random_element(kind, rng, i)
        store.save(case, element, check_refs=False)
        assert store.load(case, element.id) == element


def test_stored_file_is_canonical_json(case):
    claim = create_element(ElementKind.CLAIM, {"id": "root", "statement": "holds"}, now=10)
    path = store.save(case, claim)
    text = path.read_text(encoding="utf-8")
    payload = json.loads(text)
    assert text.endswith("}\n")
    assert list(payload) == sorted(payload)
    assert payload["schema"] == 1 and payload["kind"] == "claim"
    assert path == case.root / "elements" / "claim" / "root.json"


def test_overwrite_bumps_version(case):
    claim = create_element(ElementKind.CLAIM, {"id": "root", "statement": "holds"}, now=1663591378)
    store.save(case, claim)
    with pytest.raises(AlreadyExistsError):
        store.save(case, claim)
    store.save(case, claim, overwrite=True, now=1690280832)
    store.save(case, claim, overwrite=True, now=5)
    loaded = store.load(case, "root")
    assert loaded.version_history == [1663591378, 1690280832, 1690280833]
    assert loaded.element_version == 1690280833


def test_kind_is_part_of_identity(case):
    store.save(case, create_element(ElementKind.CLAIM, {"id": "shared", "statement": "s"}, now=1))
    measure = create_element(ElementKind.MEASURE, {"id": "shared", "name": "m", "lifecycle_phase": "testing",
                                                   "addressed_characteristic": "unseen"}, now=2)
    with pytest.raises(KindMismatchError):
        store.save(case, measure, overwrite=True)
    with pytest.raises(KindMismatchError):
        store.load(case, "shared", kind=ElementKind.MEASURE)


def test_load_missing_and_corrupt(case):
    with pytest.raises(NotFoundError):
        store.load(case, "ghost")
    path = case.root / "elements" / "claim" / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(StoreError, match="parse error"):
        store.load(case, "broken")


def test_dangling_references_refused(case):
    claim = create_element(ElementKind.CLAIM, {"id": "root", "statement": "s", "measure_ids": ["ghost"]}, now=1)
    with pytest.raises(InvariantViolationError, match="ghost"):
        store.save(case, claim)
    assert not store.exists(case, "root")


def test_failed_rename_keeps_previous_content(case, monkeypatch):
    claim = create_element(ElementKind.CLAIM, {"id": "root", "statement": "first"}, now=1)
    path = store.save(case, claim)
    before = path.read_bytes()

    def refuse(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", refuse)
    claim.statement = "second"
    with pytest.raises(StoreError, match="disk full"):
        store.save(case, claim, overwrite=True, now=2)
    monkeypatch.undo()
    assert path.read_bytes() == before
    assert [p.name for p in path.parent.iterdir()] == ["root.json"]
    assert not (case.root / store.LOCK_NAME).exists()


def test_lock_file_blocks_second_writer(case):
    (case.root / store.LOCK_NAME).write_text("4242", encoding="ascii")
    claim = create_element(ElementKind.CLAIM, {"id": "root", "statement": "s"}, now=1)
    with pytest.raises(CaseLockedError):
        store.save(case, claim)


def test_delete_is_guarded(assured_case):
    builder, ids = assured_case
    case = builder.case
    leaf = ids["leaves"]["c_correct"]
    with pytest.raises(StillReferencedError, match="c_correct"):
        store.delete(case, leaf["realization"])
    store.delete(case, "root")
    assert not store.exists(case, "root")
    with pytest.raises(NotFoundError):
        store.delete(case, "root")


def test_record_documentation(case, builder):
    builder.measure_with_blueprint("m", "bp")
    realization = builder.evidence("r1", "bp", "v2022-08", documented=False)
    path = store.write_document(case, "r1", 1663591392, "html", "<html></html>\n")
    record = DocumentationRecord.create(1663591392, "v2022-08", "html", path, utc_offset_minutes=120)
    updated = store.record_documentation(case, "r1", record)
    assert updated.documentation == [record]
    loaded = store.load(case, "r1")
    assert loaded.documentation[0].rendered_datetime == "2022-09-19 14:43:12"
    assert loaded.element_version == max(1663591392, realization.element_version + 1)
    with pytest.raises(DuplicateTimestampError):
        store.record_documentation(case, "r1", record)
    missing = DocumentationRecord.create(1690280832, "v2023-07", "html", "docs/r1/1690280832.html")
    with pytest.raises(StoreError, match="does not exist"):
        store.record_documentation(case, "r1", missing)


def test_referrers_inverse_consistency(assured_case):
    builder, ids = assured_case
    index = store.index(builder.case)
    for element in index.values():
        for ref in element.references():
            assert element.id in store.referrers(builder.case, ref)


@pytest.mark.parametrize("epoch, offset, expected", [
    (1663591392, 120, "2022-09-19 14:43:12"),
    (1690280832, 120, "2023-07-25 12:27:12"),
    (0, 0, "1970-01-01 00:00:00"),
    (1690280832, -300, "2023-07-25 05:27:12"),
])
def test_format_timestamp(epoch, offset, expected):
    assert format_timestamp(epoch, offset) == expected
    assert parse_timestamp(expected, offset) == epoch


def test_format_timestamp_rejects_large_offsets():
    with pytest.raises(ValueError):
        format_timestamp(0, 15 * 60)


@pytest.mark.parametrize("text, value", [
    ("true", True), ("False", False), ("none", None), ("12", 12), ("0.25", 0.25), ("stop", "stop"),
])
def test_coerce_value(text, value):
    assert coerce_value(text) == value


def test_format_timestamp_inverse_over_random_epochs():
    rng = np.random.default_rng(2031)
    for _ in range(1000):
        epoch = int(rng.integers(0, 2**31))
        offset = int(rng.integers(-840, 841))
        assert parse_timestamp(format_timestamp(epoch, offset), offset) == epoch


DUPLICATE_SUBCLAIM_FILE = """{
  "schema": 1,
  "kind": "claim",
  "id": "root",
  "statement": "The test data is adequate.",
  "strategy": "Argue over test-data characteristics",
  "subclaim_ids": ["c_unseen", "c_unseen"],
  "element_version": 1663591378,
  "version_history": [1663591378]
}
"""


def test_load_rejects_duplicate_subclaims(case):
    (case.root / "elements" / "claim" / "root.json").write_text(DUPLICATE_SUBCLAIM_FILE, encoding="utf-8")
    with pytest.raises(InvariantViolationError, match="duplicate subclaim"):
        store.load(case, "root")


def test_failed_write_keeps_caller_version(case, monkeypatch):
    claim = create_element(ElementKind.CLAIM, {"id": "root", "statement": "first"}, now=1663591378)
    store.save(case, claim)
    before = (claim.element_version, list(claim.version_history))

    def refuse(path, data):
        raise StoreError(f"could not write {path}: disk full")

    monkeypatch.setattr(store, "atomic_write", refuse)
    with pytest.raises(StoreError, match="disk full"):
        store.save(case, claim, overwrite=True, now=1690280832)
    assert (claim.element_version, claim.version_history) == before
    monkeypatch.undo()
    assert store.load(case, "root").element_version == 1663591378


@pytest.mark.parametrize("bad_id", ["../../escaped", "Bad_Id", "", "a/b"])
def test_case_paths_refuse_malformed_ids(case, bad_id):
    with pytest.raises(StoreError, match="malformed id"):
        case.artifacts_dir(bad_id)
    with pytest.raises(StoreError, match="malformed id"):
        case.docs_dir(bad_id)
    with pytest.raises(StoreError, match="malformed id"):
        store.write_artifact(case, bad_id, "scores.csv", "a\n1\n")
    assert sorted(p.name for p in case.root.parent.iterdir()) == ["case"]
