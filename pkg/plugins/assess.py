import json
from pathlib import Path

import click

from audit import ExportMode, Severity, export_case, import_subtree, validate_case
from cli import cli
from config import CliConfig
from database import store
from errors import StoreError


@cli.command("validate")
@click.argument("root_id")
@click.pass_context
def validate_command(ctx: click.Context, root_id):
    """Check the claim tree below ROOT_ID; exits 1 when errors are found."""
    config: CliConfig = ctx.obj
    findings = validate_case(store.open_case(config.case_dir), root_id)
    for finding in findings:
        click.echo(str(finding))
    errors = sum(f.severity is Severity.ERROR for f in findings)
    warnings = len(findings) - errors
    click.echo(f"{errors} errors, {warnings} warnings")
    if errors:
        ctx.exit(1)


@cli.command("export")
@click.argument("root_id")
@click.option("--mode", type=click.Choice([m.value for m in ExportMode]), required=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Output file (default <root>.acx.json).")
@click.pass_obj
def export_command(config: CliConfig, root_id, mode, out):
    """Write the claims and evidence below ROOT_ID to an exchange file."""
    out = Path(out or f"{root_id}.acx.json")
    document, _ = export_case(store.open_case(config.case_dir), root_id, mode, at=config.at, out=out)
    click.echo(f"Exported {len(document.evidence)} evidence record(s) ({mode}) to {out}")


@cli.command("import")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def import_command(config: CliConfig, source):
    """Recreate a subtree export in this case."""
    try:
        payload = json.loads(Path(source).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise StoreError(f"could not read exchange file {source}: {e}")
    imported = import_subtree(store.open_case(config.case_dir), payload)
    click.echo(f"Imported {len(imported)} element(s) from {source}")
