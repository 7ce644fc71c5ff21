import click

from ac_model import add_conclusion
from cli import cli
from config import OUTPUT_FORMATS, CliConfig
from database import store
from helper_func import format_timestamp, now_epoch
from reports import create_documentation


@cli.command("conclude")
@click.argument("element_id")
@click.option("--text", required=True, help="How the evidence supports (or fails) its claim.")
@click.pass_obj
def conclude_command(config: CliConfig, element_id, text):
    """Add a conclusion to a realization or claim."""
    case = store.open_case(config.case_dir)
    updated = add_conclusion(store.load(case, element_id), text, now_epoch(config.at))
    store.save(case, updated, overwrite=True, now=config.at)
    click.echo(f"Added conclusion to {element_id}")


@cli.command("doc")
@click.argument("element_id")
@click.option("--format", "output_format", type=click.Choice(OUTPUT_FORMATS),
              help="Overrides the global --format.")
@click.pass_obj
def doc_command(config: CliConfig, element_id, output_format):
    """Render and publish a new documentation version."""
    case = store.open_case(config.case_dir)
    record = create_documentation(case, element_id, output_format or config.output_format,
                                  config.utc_offset_minutes, at=config.at)
    click.echo(f"Documented {element_id} at {record.timestamp} ({record.rendered_datetime}): {record.path}")


@cli.command("log")
@click.argument("element_id")
@click.pass_obj
def log_command(config: CliConfig, element_id):
    """List the documentation versions of an element."""
    case = store.open_case(config.case_dir)
    element = store.load(case, element_id)
    click.echo("Timestamp\tDate and time\tData/model version\tDocument")
    for record in element.documentation:
        rendered = format_timestamp(record.timestamp, config.utc_offset_minutes)
        click.echo(f"{record.timestamp}\t{rendered}\t{record.data_model_version or '--'}\t{record.path}")
