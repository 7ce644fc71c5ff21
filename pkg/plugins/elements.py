import json

import click

from ac_model import Characteristic, ElementKind, LifecyclePhase, Relation, create_element, link, refine_claim, summarize
from cli import cli
from config import CliConfig
from database import store
from errors import ElementError
from templates import template_fields, template_names


def _overrides(**options) -> dict:
    return {key: value for key, value in options.items() if value not in (None, (), "")}


def _store_new(config: CliConfig, kind: ElementKind, fields: dict):
    case = store.open_case(config.case_dir)
    element = create_element(kind, fields, now=config.at, existing_ids=store.index(case))
    store.save(case, element, now=config.at)
    return case, element


@cli.command("init")
@click.pass_obj
def init_command(config: CliConfig):
    """Create the case directory layout."""
    case = store.init_case(config.case_dir)
    click.echo(f"Initialized case at {case.root}")


@cli.group("new")
def new_group():
    """Create a claim, measure or blueprint."""


@new_group.command("claim")
@click.argument("element_id")
@click.option("--statement", required=True)
@click.option("--name")
@click.option("--description")
@click.option("--context", "contexts", multiple=True, help="Repeatable.")
@click.option("--assumption", "assumptions", multiple=True, help="Repeatable.")
@click.option("--risk-criterion", help="e.g. ALARP")
@click.pass_obj
def new_claim(config: CliConfig, element_id, statement, name, description, contexts, assumptions, risk_criterion):
    fields = _overrides(id=element_id, statement=statement, name=name, description=description,
                        risk_criterion=risk_criterion)
    fields["contexts"] = list(contexts)
    fields["assumptions"] = list(assumptions)
    _, claim = _store_new(config, ElementKind.CLAIM, fields)
    click.echo(f"Created claim {claim.id} (version {claim.element_version})")


@new_group.command("measure")
@click.argument("element_id", required=False)
@click.option("--template", type=click.Choice(template_names(ElementKind.MEASURE)))
@click.option("--name")
@click.option("--description")
@click.option("--lifecycle-phase", type=click.Choice([p.value for p in LifecyclePhase]))
@click.option("--characteristic", type=click.Choice([c.value for c in Characteristic]))
@click.pass_obj
def new_measure(config: CliConfig, element_id, template, name, description, lifecycle_phase, characteristic):
    fields = template_fields(ElementKind.MEASURE, template) if template else {}
    fields.update(_overrides(id=element_id, name=name, description=description,
                             lifecycle_phase=lifecycle_phase, addressed_characteristic=characteristic))
    _, measure = _store_new(config, ElementKind.MEASURE, fields)
    click.echo(f"Created measure {measure.id} (version {measure.element_version})")


def _read_steps(path) -> list:
    try:
        with open(path, encoding="utf-8") as handle:
            steps = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ElementError(f"could not read steps from {path}: {e}")
    if not isinstance(steps, list):
        raise ElementError(f"{path} must hold a JSON list of steps")
    return steps


@new_group.command("blueprint")
@click.argument("element_id", required=False)
@click.option("--template", type=click.Choice(template_names(ElementKind.BLUEPRINT)))
@click.option("--measure", "measure_id", help="Measure this blueprint realizes.")
@click.option("--name")
@click.option("--description")
@click.option("--justification")
@click.option("--steps", "steps_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON list of {title, description, technique: {name, parameters}, output_refs}.")
@click.pass_obj
def new_blueprint(config: CliConfig, element_id, template, measure_id, name, description, justification, steps_file):
    fields = template_fields(ElementKind.BLUEPRINT, template) if template else {}
    fields.update(_overrides(id=element_id, realized_measure_id=measure_id, name=name,
                             description=description, justification=justification))
    if steps_file:
        fields["steps"] = _read_steps(steps_file)
    case = store.open_case(config.case_dir)
    index = store.index(case)
    blueprint = create_element(ElementKind.BLUEPRINT, fields, now=config.at, existing_ids=index)
    # the measure must accept the link before anything is written
    measure = link({**index, blueprint.id: blueprint}, blueprint.realized_measure_id,
                   Relation.MEASURE_BLUEPRINT, blueprint.id, now=config.at)
    store.save(case, blueprint, now=config.at)
    store.save(case, measure, overwrite=True, now=config.at)
    click.echo(f"Created blueprint {blueprint.id} for measure {blueprint.realized_measure_id}")


@cli.command("refine")
@click.argument("claim_id")
@click.argument("subclaim_ids", nargs=-1, required=True)
@click.option("--strategy", required=True)
@click.pass_obj
def refine_command(config: CliConfig, claim_id, subclaim_ids, strategy):
    """Refine a claim into subclaims (created beforehand)."""
    case = store.open_case(config.case_dir)
    claim = store.load(case, claim_id, kind=ElementKind.CLAIM)
    refined = refine_claim(claim, strategy, subclaim_ids, now=config.at)
    store.save(case, refined, overwrite=True, now=config.at)
    click.echo(f"Refined {claim_id} into {', '.join(subclaim_ids)}")


@cli.command("link")
@click.argument("from_id")
@click.argument("relation", type=click.Choice([r.value for r in Relation]))
@click.argument("to_id")
@click.pass_obj
def link_command(config: CliConfig, from_id, relation, to_id):
    """Reference a measure from a claim, a blueprint from a measure, or evidence from a claim."""
    case = store.open_case(config.case_dir)
    index = store.index(case)
    updated = link(index, from_id, relation, to_id, now=config.at)
    if updated is index[from_id]:
        click.echo(f"{from_id} already links {to_id}")
        return
    store.save(case, updated, overwrite=True, now=config.at)
    click.echo(f"Linked {from_id} -[{relation}]-> {to_id}")


@cli.command("delete")
@click.argument("element_id")
@click.pass_obj
def delete_command(config: CliConfig, element_id):
    """Delete an element nothing references."""
    store.delete(store.open_case(config.case_dir), element_id)
    click.echo(f"Deleted {element_id}")


@cli.command("show")
@click.argument("element_id")
@click.pass_obj
def show_command(config: CliConfig, element_id):
    """Print the summary of an element."""
    case = store.open_case(config.case_dir)
    summary = summarize(store.load(case, element_id), store.index(case), config.utc_offset_minutes)
    click.echo(f"{summary.kind} {summary.id}: {summary.name}")
    if summary.description:
        click.echo(f"  {summary.description}")
    for label, value in summary.details:
        if value:
            click.echo(f"  {label}: {value}")
    for label, ids in summary.refs:
        click.echo(f"  {label}: {', '.join(ids) or '-'}")
    click.echo(f"  Element version: {' '.join(str(v) for v in summary.element_versions)}")
    if summary.latest_conclusion is not None:
        click.echo(f"  Latest conclusion: {summary.latest_conclusion.text}")
