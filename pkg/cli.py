import click

from config import CASE_DIR, DEFAULT_SEED, LOGGER, OUTPUT_FORMAT, OUTPUT_FORMATS, UTC_OFFSET_MINUTES, WORKERS, CliConfig
from errors import AcForgeError


class CaseCli(click.Group):
    """Command group that turns domain errors into exit code 1."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except AcForgeError as e:
            LOGGER(__name__).warning(f"{ctx.invoked_subcommand or ctx.info_name} failed: {e}")
            click.echo(f"Error: {e}", err=True)
            ctx.exit(1)


@click.group(cls=CaseCli)
@click.option("--case", "case_dir", envvar="ACFORGE_CASE_DIR", default=CASE_DIR, show_default=True,
              type=click.Path(file_okay=False), help="Case directory.")
@click.option("--utc-offset", type=int, default=UTC_OFFSET_MINUTES, show_default=True,
              help="Display offset from UTC in minutes.")
@click.option("--format", "output_format", type=click.Choice(OUTPUT_FORMATS), default=OUTPUT_FORMAT,
              show_default=True, help="Documentation format.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True, help="Default technique seed.")
@click.option("--workers", type=int, default=WORKERS, show_default=True, help="Threads for tree building.")
@click.option("--at", type=int, default=None, help="Pin the clock to this epoch (reproducible runs).")
@click.pass_context
def cli(ctx: click.Context, case_dir, utc_offset, output_format, seed, workers, at):
    """Assurance-case evidence: assemble claims, realize blueprints, document, validate and export."""
    try:
        ctx.obj = CliConfig(case_dir=case_dir, utc_offset_minutes=utc_offset, seed=seed,
                            output_format=output_format, workers=workers, at=at)
    except ValueError as e:
        raise click.BadParameter(str(e), ctx=ctx)


# subcommands register themselves on import
from plugins import assess, documentation, elements, realize  # noqa: E402,F401
