"""Built-in measures and blueprints offered when assembling a new case."""

import copy

from ac_model import ElementKind
from errors import ElementError

MEASURE_TEMPLATES = {
    "detect_incorrect_labels": {
        "name": "Detect incorrect labels and revise them",
        "description": "Find test rows whose label is likely wrong and have a person check them.",
        "lifecycle_phase": "analysis",
        "addressed_characteristic": "correct_relation",
    },
    "detect_outliers": {
        "name": "Detect outliers in the test data",
        "description": "Find rows that lie far from the bulk of the test data.",
        "lifecycle_phase": "analysis",
        "addressed_characteristic": "representative",
    },
    "check_unseen": {
        "name": "Check that the test data was unseen during development",
        "description": "Look for test rows that also occur in the training data.",
        "lifecycle_phase": "construction",
        "addressed_characteristic": "unseen",
    },
    "check_representativity": {
        "name": "Check that the test data is representative",
        "description": "Compare feature distributions of the test data with a reference sample of the application scope.",
        "lifecycle_phase": "analysis",
        "addressed_characteristic": "representative",
    },
}

BLUEPRINT_TEMPLATES = {
    "lf_conf": {
        "name": "detect_label_faults_w_conf_learning",
        "description": "Detect potentially incorrect labels with confident learning approach.",
        "realized_measure_id": "detect_incorrect_labels",
        "justification": (
            "Rows whose confidently predicted class differs from their label are the likely label "
            "faults; checking them by hand bounds the remaining label noise."
        ),
        "steps": [
            {
                "title": "Load and prepare data",
                "description": "Load the test table; optionally keep one class and merge the rest (parameter keep).",
                "technique": {"name": "collapse_classes", "parameters": {}},
                "output_refs": ["class_counts.json"],
            },
            {
                "title": "Load DDM and get prediction probabilities per class per data point",
                "description": "Prediction probabilities are produced outside acforge and passed with --probs.",
            },
            {
                "title": "Use confident learning to compute number of label confusions per class",
                "description": "Per-class thresholds, confident joint and the rows off its diagonal.",
                "technique": {"name": "confident_learning", "parameters": {}},
                "output_refs": [
                    "confident_joint.csv",
                    "class_thresholds.json",
                    "label_issues.csv",
                    "label_fault_candidates.csv",
                ],
            },
            {
                "title": "Determine data points with potentially incorrect labels, check them manually and revise",
                "description": "Review the label issues and record the decision as a conclusion.",
            },
        ],
    },
    "outlier_iforest": {
        "name": "detect_outliers_w_isolation_forest",
        "description": "Score every test row with an isolation forest and inspect the highest scores.",
        "realized_measure_id": "detect_outliers",
        "justification": "Rows that are isolated after few random splits differ from the bulk of the data.",
        "steps": [
            {
                "title": "Load and prepare data",
                "description": "Load the test table; only numeric feature columns are scored.",
            },
            {
                "title": "Score rows with an isolation forest",
                "technique": {"name": "isolation_forest", "parameters": {"n_trees": 100, "psi": 256}},
                "output_refs": ["outlier_scores.csv", "outlier_summary.json"],
            },
            {
                "title": "Inspect the highest-scoring rows",
                "description": "Decide for each top-scoring row whether it belongs to the application scope.",
            },
        ],
    },
    "overlap_train_test": {
        "name": "find_test_rows_in_training_data",
        "description": "Exact comparison of every test row with every training row.",
        "realized_measure_id": "check_unseen",
        "justification": "A test row that also occurs in the training data was not unseen.",
        "steps": [
            {
                "title": "Load test and training data",
                "description": "The training table is passed with --reference.",
            },
            {
                "title": "Find test rows that also occur in the training data",
                "technique": {"name": "overlap_check", "parameters": {"max_fraction": 0.0}},
                "output_refs": ["overlap.json"],
            },
            {
                "title": "Remove or justify overlapping rows",
            },
        ],
    },
    "repr_divergence": {
        "name": "compare_feature_distributions",
        "description": "Jensen-Shannon divergence per numeric feature between reference and test data.",
        "realized_measure_id": "check_representativity",
        "justification": "Small divergences show the test data covers the reference scope in the same proportions.",
        "steps": [
            {
                "title": "Load reference and test data",
                "description": "The reference table is passed with --reference.",
            },
            {
                "title": "Compare feature distributions",
                "technique": {"name": "divergence_check", "parameters": {"bins": 10, "threshold": 0.1}},
                "output_refs": ["divergence.json"],
            },
            {
                "title": "Review flagged features",
            },
        ],
    },
}

_TEMPLATES = {
    ElementKind.MEASURE: MEASURE_TEMPLATES,
    ElementKind.BLUEPRINT: BLUEPRINT_TEMPLATES,
}


def template_names(kind) -> list:
    return sorted(_TEMPLATES.get(ElementKind(kind), {}))


def template_fields(kind, name: str) -> dict:
    """Fields of a catalog entry, ready for create_element (id defaults to the template name)."""
    catalog = _TEMPLATES.get(ElementKind(kind))
    if catalog is None:
        raise ElementError(f"there are no built-in {ElementKind(kind).value} templates")
    if name not in catalog:
        raise ElementError(
            f"unknown {ElementKind(kind).value} template {name!r}; available: {', '.join(sorted(catalog))}"
        )
    fields = copy.deepcopy(catalog[name])
    fields["id"] = name
    return fields
