import os
import tempfile
from pathlib import Path

import numpy as np
import pytest

os.environ.setdefault("ACFORGE_LOG_FILE", os.path.join(tempfile.gettempdir(), "acforge-test-log.txt"))

from ac_model import (  # noqa: E402
    DocumentationRecord,
    ElementKind,
    Relation,
    add_conclusion,
    create_element,
    link,
    refine_claim,
)
from database import store  # noqa: E402
from templates import template_fields  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "golden"
T0 = 1663591378


def pytest_addoption(parser):
    parser.addoption("--update-golden", action="store_true", default=False,
                     help="Rewrite the files under tests/golden from this run.")


@pytest.fixture
def update_golden(request) -> bool:
    return request.config.getoption("--update-golden")


@pytest.fixture
def case(tmp_path):
    return store.init_case(tmp_path / "case")


class CaseBuilder:
    """Builds cases element by element on a ticking clock."""

    def __init__(self, case):
        self.case = case
        self.clock = T0

    def tick(self) -> int:
        self.clock += 10
        return self.clock

    def add(self, kind, **fields):
        element = create_element(kind, fields, now=self.tick())
        store.save(self.case, element, now=self.clock, check_refs=False)
        return element

    def resave(self, element):
        store.save(self.case, element, overwrite=True, now=self.tick(), check_refs=False)
        return store.load(self.case, element.id)

    def measure_with_blueprint(self, measure_id, blueprint_id, characteristic="other"):
        self.add(ElementKind.MEASURE, id=measure_id, name=f"Measure {measure_id}", lifecycle_phase="testing",
                 addressed_characteristic=characteristic, blueprint_ids=[blueprint_id])
        self.add(ElementKind.BLUEPRINT, id=blueprint_id, name=f"Blueprint {blueprint_id}",
                 realized_measure_id=measure_id, steps=[{"title": "Run check"}])

    def evidence(self, realization_id, blueprint_id, data_version, conclusion="Checked and accepted.",
                 documented=True):
        realization = create_element(ElementKind.REALIZATION, {
            "id": realization_id,
            "blueprint_id": blueprint_id,
            "data_model_version": data_version,
            "step_status": {"Run check": "manual"},
        }, now=self.tick())
        if conclusion:
            realization = add_conclusion(realization, conclusion, self.clock)
        store.save(self.case, realization, now=self.clock)
        if documented:
            stamp = self.tick()
            path = store.write_document(self.case, realization_id, stamp, "md", "# evidence\n")
            store.record_documentation(
                self.case, realization_id, DocumentationRecord.create(stamp, data_version, "markdown", path)
            )
        return store.load(self.case, realization_id)

    def attach(self, claim_id, relation, target_id):
        updated = link(store.index(self.case), claim_id, relation, target_id, now=self.tick())
        store.save(self.case, updated, overwrite=True, now=self.clock)
        return updated


LEAVES = (
    ("c_unseen", "unseen", "The test data was unseen during model development."),
    ("c_repr", "representative", "The test data is representative of the intended application scope."),
    ("c_correct", "correct_relation", "The test data models the relation between inputs and outcomes correctly."),
)


def build_assured_case(builder: CaseBuilder) -> dict:
    """Root claim refined into the three test-data characteristics, each with documented evidence."""
    root = builder.add(ElementKind.CLAIM, id="root", statement="The test data is adequate for the DDM.",
                       risk_criterion="ALARP")
    for leaf_id, characteristic, statement in LEAVES:
        builder.add(ElementKind.CLAIM, id=leaf_id, statement=statement)
    root = refine_claim(root, "Argue over the test-data characteristics", [leaf for leaf, _, _ in LEAVES],
                        now=builder.tick())
    store.save(builder.case, root, overwrite=True, now=builder.clock)
    ids = {"root": "root", "leaves": {}}
    for leaf_id, characteristic, _ in LEAVES:
        measure_id, blueprint_id = f"m_{leaf_id}", f"bp_{leaf_id}"
        builder.measure_with_blueprint(measure_id, blueprint_id, characteristic)
        builder.attach(leaf_id, Relation.CLAIM_MEASURE, measure_id)
        realization = builder.evidence(f"r_{leaf_id}", blueprint_id, "v2023-07")
        builder.attach(leaf_id, Relation.CLAIM_EVIDENCE, realization.id)
        ids["leaves"][leaf_id] = {"measure": measure_id, "blueprint": blueprint_id, "realization": realization.id}
    return ids


@pytest.fixture
def builder(case):
    return CaseBuilder(case)


@pytest.fixture
def assured_case(builder):
    ids = build_assured_case(builder)
    return builder, ids


def install_lf_conf(case, now=T0):
    """Catalog measure and blueprint for label-fault detection."""
    measure = create_element(ElementKind.MEASURE, template_fields(ElementKind.MEASURE, "detect_incorrect_labels"),
                             now=now)
    measure.blueprint_ids = ["lf_conf"]
    store.save(case, measure, now=now, check_refs=False)
    blueprint = create_element(ElementKind.BLUEPRINT, template_fields(ElementKind.BLUEPRINT, "lf_conf"), now=now)
    store.save(case, blueprint, now=now)
    return measure, blueprint


FOUR_ROW_LABELS = ["not_stop", "not_stop", "stop", "stop"]
FOUR_ROW_PROBS = [[0.9, 0.1], [0.6, 0.4], [0.2, 0.8], [0.8, 0.2]]


@pytest.fixture
def four_row_files(tmp_path):
    """The hand-traced 4-row label-fault example as CSV files."""
    data = tmp_path / "data.csv"
    probs = tmp_path / "probs.csv"
    data.write_text(
        "x1,x2,label\n" + "".join(f"{i},{i * 2},{label}\n" for i, label in enumerate(FOUR_ROW_LABELS)),
        encoding="utf-8",
    )
    probs.write_text(
        "not_stop,stop\n" + "".join(f"{a},{b}\n" for a, b in FOUR_ROW_PROBS),
        encoding="utf-8",
    )
    return data, probs


def write_synthetic_signs(directory: Path, n: int = 60, seed: int = 11) -> tuple:
    """Seeded stop/not_stop table with a few flipped labels and matching probabilities."""
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, 2, size=n)
    confidence = rng.uniform(0.65, 0.99, size=n)
    labels = truth.copy()
    flipped = rng.choice(n, size=max(1, n // 20), replace=False)
    labels[flipped] = 1 - labels[flipped]
    names = ("not_stop", "stop")
    data = directory / "signs.csv"
    probs = directory / "signs_probs.csv"
    data_lines = ["width,height,hue,label"]
    prob_lines = ["not_stop,stop"]
    for i in range(n):
        width, height, hue = rng.normal(50, 5), rng.normal(50, 5), rng.uniform(0, 360)
        data_lines.append(f"{width:.3f},{height:.3f},{hue:.1f},{names[labels[i]]}")
        p_true = float(f"{confidence[i]:.6f}")
        p_stop = p_true if truth[i] == 1 else float(f"{1 - p_true:.6f}")
        prob_lines.append(f"{1 - p_stop:.6f},{p_stop:.6f}")
    data.write_text("\n".join(data_lines) + "\n", encoding="utf-8")
    probs.write_text("\n".join(prob_lines) + "\n", encoding="utf-8")
    return data, probs
