import dataclasses
from pathlib import Path
from typing import Optional

import click

from ac_model import Blueprint, ElementKind, Realization, StepStatus, create_element
from cli import cli
from config import LOGGER, CliConfig
from database import store
from datasets import load_labeled_table
from errors import ElementError, TechniqueError
from helper_func import check_id, coerce_value
from techniques import StepContext, TechniqueSpec, accepted_parameters, build_technique

logger = LOGGER(__name__)


def default_realization_id(blueprint_id: str) -> str:
    return f"{blueprint_id}_realized"


def _step_parameters(blueprint: Blueprint, overrides: dict) -> dict:
    """Parameters per technique step after applying overrides to every step that accepts them."""
    per_step, used = {}, set()
    for step in blueprint.steps:
        if step.technique is None:
            continue
        accepted = accepted_parameters(step.technique.name)
        parameters = dict(step.technique.parameters)
        for key, value in overrides.items():
            if key in accepted:
                parameters[key] = value
                used.add(key)
        per_step[step.title] = parameters
    unused = sorted(set(overrides) - used)
    if unused:
        raise TechniqueError(f"no step of {blueprint.id} accepts parameter(s) {', '.join(unused)}")
    return per_step


def run_blueprint(case, blueprint_id: str, data_path, data_version: str, probs_path=None,
                  reference_path=None, label_column: str = "label", overrides: Optional[dict] = None,
                  skip=(), realization_id: Optional[str] = None, seed: Optional[int] = None,
                  workers: int = 1, now: Optional[int] = None) -> Realization:
    """Apply a blueprint to a data/model version and store the realization.

    Every step runs before anything is written; the first failing step aborts
    the run and leaves the case untouched.
    """
    realization_id = check_id(realization_id or default_realization_id(blueprint_id), "realization id")
    blueprint = store.load(case, blueprint_id, kind=ElementKind.BLUEPRINT)
    titles = [step.title for step in blueprint.steps]
    unknown = sorted(set(skip) - set(titles))
    if unknown:
        raise ElementError(f"{blueprint_id} has no step titled {', '.join(repr(t) for t in unknown)}")
    parameters = _step_parameters(blueprint, dict(overrides or {}))

    table = load_labeled_table(data_path, label_column, data_version)
    context = StepContext(
        table=table,
        probabilities_path=Path(probs_path) if probs_path else None,
        reference_path=Path(reference_path) if reference_path else None,
        workers=workers,
    )
    artifacts, bindings, status = {}, {}, {}
    for number, step in enumerate(blueprint.steps, start=1):
        if step.title in skip:
            status[step.title] = StepStatus.SKIPPED.value
            continue
        if step.technique is None:
            status[step.title] = StepStatus.MANUAL.value
            continue
        technique = build_technique(TechniqueSpec(step.technique.name, parameters[step.title], seed=seed))
        try:
            result = technique.apply(context)
        except TechniqueError as e:
            raise TechniqueError(f"step {number} ({step.title}) failed: {e}")
        for name in result.artifacts:
            if name in artifacts:
                raise TechniqueError(f"step {number} ({step.title}) produced {name} a second time")
        artifacts.update(result.artifacts)
        context.table = result.table
        bindings[step.title] = technique.get_params(deep=False)
        status[step.title] = StepStatus.EXECUTED.value
        logger.info(f"{blueprint_id} step {number} ({step.title}): {result.summary}")

    previous = store.load(case, realization_id, kind=ElementKind.REALIZATION) \
        if store.exists(case, realization_id) else None
    if previous is not None and previous.blueprint_id != blueprint_id:
        raise ElementError(f"{realization_id} realizes {previous.blueprint_id}, not {blueprint_id}")

    paths = {name: store.artifact_path(case, realization_id, name) for name in sorted(artifacts)}
    if previous is None:
        realization = create_element(ElementKind.REALIZATION, {
            "id": realization_id,
            "name": blueprint.name,
            "description": blueprint.description,
            "blueprint_id": blueprint_id,
            "data_model_version": data_version,
            "parameter_bindings": bindings,
            "artifacts": paths,
            "step_status": status,
        }, now=now)
    else:
        realization = dataclasses.replace(previous, data_model_version=data_version,
                                          parameter_bindings=bindings, artifacts=paths, step_status=status)
    realization.check(strict=True)
    store.commit_realization(case, realization, artifacts, overwrite=previous is not None, now=now)
    logger.info(f"Realized {blueprint_id} as {realization_id} on {data_version}")
    return realization


def _parse_params(ctx, param, values) -> dict:
    parsed = {}
    for item in values:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise click.BadParameter(f"expected key=value, got {item!r}")
        parsed[key.strip()] = coerce_value(raw)
    return parsed


@cli.command("realize")
@click.argument("blueprint_id")
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False), help="Test table (CSV).")
@click.option("--data-version", required=True, help="Data/model version tag, e.g. v2023-07.")
@click.option("--probs", "probs_path", type=click.Path(dir_okay=False), help="Prediction probabilities (CSV).")
@click.option("--reference", "reference_path", type=click.Path(dir_okay=False),
              help="Training or reference table (CSV).")
@click.option("--label", "label_column", default="label", show_default=True, help="Label column name.")
@click.option("--param", "overrides", multiple=True, callback=_parse_params, help="key=value, repeatable.")
@click.option("--skip", multiple=True, help="Title of a step to mark as skipped, repeatable.")
@click.option("--id", "realization_id", help="Realization id (default <blueprint>_realized).")
@click.option("--seed", type=int, help="Seed for randomized techniques.")
@click.pass_obj
def realize_command(config: CliConfig, blueprint_id, data_path, data_version, probs_path, reference_path,
                    label_column, overrides, skip, realization_id, seed):
    """Run a blueprint's steps on a dataset and store the realization."""
    case = store.open_case(config.case_dir)
    realization = run_blueprint(
        case, blueprint_id, data_path, data_version,
        probs_path=probs_path,
        reference_path=reference_path,
        label_column=label_column,
        overrides=overrides,
        skip=tuple(skip),
        realization_id=realization_id,
        seed=config.seed if seed is None else seed,
        workers=config.workers,
        now=config.at,
    )
    click.echo(f"Created realization {realization.id} of {blueprint_id} ({realization.data_model_version})")
    for name in sorted(realization.artifacts):
        click.echo(f"  {realization.artifacts[name]}")
