"""Documentation rendering and publishing.

A document has a summary section, a management section (a transcript of the
element's creation, versions and storage) and, for realizations, a blueprint
section walking through every step with its parameters and artifacts.
Rendering is a pure function of element state, format and UTC offset.
"""

from __future__ import annotations

import dataclasses
import html
import io
import json
from dataclasses import dataclass, field
from pathlib import PurePosixPath
from typing import Optional, Union

import pandas as pd

from ac_model import AcElement, Blueprint, DocFormat, DocumentationRecord, Realization, StepStatus, summarize
from config import FORMAT_SUFFIX, LOGGER
from database import store
from errors import AcForgeError, NotFoundError, RenderError
from helper_func import canonical_json, format_timestamp, now_epoch

logger = LOGGER(__name__)

MAX_TABLE_ROWS = 50
CONCLUSION_STEP = "Describe and add conclusion, create documentation, save realized blueprint"
PLACEHOLDER = "--"


# ---------------- DOCUMENT MODEL ---------------- #

@dataclass(frozen=True)
class Text:
    text: str
    strong: bool = False


@dataclass(frozen=True)
class Table:
    headers: tuple
    rows: tuple


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Link:
    label: str
    target: str


@dataclass(frozen=True)
class Section:
    heading: str
    blocks: tuple = ()


@dataclass(frozen=True)
class Document:
    title: str
    sections: tuple = field(default_factory=tuple)

    @property
    def headings(self) -> list:
        return [section.heading for section in self.sections]


# ---------------- SECTIONS ---------------- #

def _summary_section(element: AcElement, index: dict, utc_offset_minutes: int) -> Section:
    summary = summarize(element, index, utc_offset_minutes)
    blocks = [
        Text(f"ID: {summary.id}"),
        Text(f"Kind: {summary.kind}"),
        Text(f"Name: {summary.name}"),
        Text(f"Description: {summary.description or PLACEHOLDER}"),
    ]
    for label, value in summary.details:
        if value:
            blocks.append(Text(f"{label}: {value}"))
    for label, ids in summary.refs:
        blocks.append(Text(f"{label}: {', '.join(ids) if ids else PLACEHOLDER}"))
    blocks.append(Text(f"Element version: {' '.join(str(v) for v in summary.element_versions)}"))
    blocks.append(Text("Documentation version:"))
    blocks.append(Table(
        headers=("Timestamp", "Date and time", "Data/model version", "Document"),
        rows=tuple(
            (str(row.timestamp), row.rendered_datetime, row.data_model_version or PLACEHOLDER, row.path)
            for row in summary.documentation
        ),
    ))
    latest = summary.latest_conclusion
    if latest is None:
        blocks.append(Text(f"Latest conclusion: {PLACEHOLDER}"))
    else:
        blocks.append(Text(
            f"Latest conclusion ({format_timestamp(latest.timestamp, utc_offset_minutes)}): {latest.text}"
        ))
    return Section(heading="Summary", blocks=tuple(blocks))


def _management_section(element: AcElement, utc_offset_minutes: int) -> Section:
    versions = element.versions()
    lines = [f"create {element.kind.value} {element.id}"]
    for i, version in enumerate(versions):
        verb = "store" if i == 0 else "store --overwrite"
        lines.append(f"{verb}  version {version}  ({format_timestamp(version, utc_offset_minutes)})")
    stored_at = (store.KIND_DIRS[element.kind] / f"{element.id}.json").as_posix()
    lines.append(f"saved as {stored_at}")
    for record in element.documentation:
        lines.append(f"documented {record.timestamp} as {record.format.value}: {record.path}")
    return Section(heading="Management", blocks=(Literal("\n".join(lines)),))


def _csv_table(content: str, name: str) -> list:
    try:
        frame = pd.read_csv(io.StringIO(content), header=None, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError):
        return []
    rows = [tuple(str(cell) for cell in row) for row in frame.itertuples(index=False, name=None)]
    if not rows:
        return []
    headers, body = rows[0], rows[1:]
    blocks = [Table(headers=headers, rows=tuple(body[:MAX_TABLE_ROWS]))]
    if len(body) > MAX_TABLE_ROWS:
        blocks.append(Text(f"(first {MAX_TABLE_ROWS} of {len(body)} rows; full table in {name})"))
    return blocks


def _artifact_blocks(name: str, relative_path: str, case, link_base: str) -> list:
    blocks = [Text(f"{name}:", strong=True)]
    suffix = PurePosixPath(name).suffix.lower()
    content = None
    if case is not None and suffix in (".csv", ".json"):
        try:
            content = store.read_artifact(case, relative_path)
        except NotFoundError as e:
            raise RenderError(str(e))
    if content is not None and suffix == ".csv":
        table = _csv_table(content, name)
        if table:
            return blocks + table
    if content is not None and suffix == ".json":
        try:
            return blocks + [Literal(canonical_json(json.loads(content)).rstrip("\n"))]
        except json.JSONDecodeError:
            pass
    return blocks + [Link(label=name, target=f"{link_base}{relative_path}")]


def _blueprint_section(realization: Realization, index: dict, case, utc_offset_minutes: int) -> Section:
    blueprint = index.get(realization.blueprint_id)
    if not isinstance(blueprint, Blueprint):
        raise RenderError(f"realization {realization.id}: blueprint {realization.blueprint_id} is not available")
    link_base = "../../"
    blocks = [Text("Step Initial: Evidence version", strong=True)]
    if realization.documentation:
        latest = realization.documentation[-1]
        blocks.append(Text(
            f"Documentation timestamp: {latest.timestamp} "
            f"({format_timestamp(latest.timestamp, utc_offset_minutes)})"
        ))
    blocks.append(Text(f"Data/model version: {realization.data_model_version}"))

    placed = set()
    for number, step in enumerate(blueprint.steps, start=1):
        status = realization.step_status.get(step.title)
        if status is None:
            raise RenderError(f"realization {realization.id}: step {step.title!r} was neither executed nor skipped")
        blocks.append(Text(f"Step{number}: {step.title}", strong=True))
        if step.description:
            blocks.append(Text(step.description))
        blocks.append(Text(f"Status: {StepStatus(status).value}"))
        if step.technique is not None:
            bound = realization.parameter_bindings.get(step.title, step.technique.parameters)
            arguments = ", ".join(f"{key}={bound[key]!r}" for key in sorted(bound))
            blocks.append(Literal(f"{step.technique.name}({arguments})"))
        for name in step.output_refs:
            if name in realization.artifacts and name not in placed:
                placed.add(name)
                blocks.extend(_artifact_blocks(name, realization.artifacts[name], case, link_base))

    blocks.append(Text(f"Step Conclusion: {CONCLUSION_STEP}", strong=True))
    for conclusion in realization.conclusions:
        blocks.append(Text(f"{format_timestamp(conclusion.timestamp, utc_offset_minutes)}: {conclusion.text}"))
    if not realization.conclusions:
        blocks.append(Text(f"Conclusion: {PLACEHOLDER}"))
    for name in sorted(realization.artifacts):
        if name not in placed:
            placed.add(name)
            blocks.extend(_artifact_blocks(name, realization.artifacts[name], case, link_base))
    return Section(heading="Blueprint", blocks=tuple(blocks))


def build_document(element: AcElement, utc_offset_minutes: int = 0, index: Optional[dict] = None,
                   case=None) -> Document:
    index = dict(index or {})
    sections = [
        _summary_section(element, index, utc_offset_minutes),
        _management_section(element, utc_offset_minutes),
    ]
    if isinstance(element, Realization):
        sections.append(_blueprint_section(element, index, case, utc_offset_minutes))
    return Document(title=f"{element.kind.value.capitalize()} {element.id}: {element.name}",
                    sections=tuple(sections))


# ---------------- SERIALIZERS ---------------- #

_STYLE = (
    "body{font-family:sans-serif;margin:2em;max-width:70em}"
    "table{border-collapse:collapse;margin:0.5em 0}"
    "th,td{border:1px solid #999;padding:2px 8px;text-align:left}"
    "pre{background:#f4f4f4;padding:0.5em;white-space:pre-wrap}"
)


def _html_block(block) -> str:
    if isinstance(block, Text):
        text = html.escape(block.text)
        return f"<p><strong>{text}</strong></p>" if block.strong else f"<p>{text}</p>"
    if isinstance(block, Table):
        head = "".join(f"<th>{html.escape(h)}</th>" for h in block.headers)
        body = "".join(
            "<tr>" + "".join(f"<td>{html.escape(cell)}</td>" for cell in row) + "</tr>" for row in block.rows
        )
        return f'<table border="1"><thead><tr>{head}</tr></thead><tbody>{body}</tbody></table>'
    if isinstance(block, Literal):
        return f"<pre><code>{html.escape(block.text)}</code></pre>"
    if isinstance(block, Link):
        return f'<p><a href="{html.escape(block.target, quote=True)}">{html.escape(block.label)}</a></p>'
    raise RenderError(f"unsupported block {type(block).__name__}")


def to_html(document: Document) -> str:
    lines = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{html.escape(document.title)}</title>",
        f"<style>{_STYLE}</style>",
        "</head>",
        "<body>",
        f"<h1>{html.escape(document.title)}</h1>",
    ]
    for section in document.sections:
        lines.append("<section>")
        lines.append(f"<h2>{html.escape(section.heading)}</h2>")
        lines.extend(_html_block(block) for block in section.blocks)
        lines.append("</section>")
    lines += ["</body>", "</html>"]
    return "\n".join(lines) + "\n"


def _md_cell(value: str) -> str:
    return value.replace("|", "\\|").replace("\n", " ")


def _markdown_block(block) -> str:
    if isinstance(block, Text):
        return f"**{block.text}**" if block.strong else block.text
    if isinstance(block, Table):
        header = "| " + " | ".join(_md_cell(h) for h in block.headers) + " |"
        rule = "|" + "|".join(" --- " for _ in block.headers) + "|"
        rows = ["| " + " | ".join(_md_cell(c) for c in row) + " |" for row in block.rows]
        return "\n".join([header, rule] + rows)
    if isinstance(block, Literal):
        return f"```\n{block.text}\n```"
    if isinstance(block, Link):
        return f"[{block.label}]({block.target})"
    raise RenderError(f"unsupported block {type(block).__name__}")


def to_markdown(document: Document) -> str:
    parts = [f"# {document.title}"]
    for section in document.sections:
        parts.append(f"## {section.heading}")
        parts.extend(_markdown_block(block) for block in section.blocks)
    return "\n\n".join(parts) + "\n"


def render_documentation(element: AcElement, fmt: Union[str, DocFormat] = DocFormat.HTML,
                         utc_offset_minutes: int = 0, index: Optional[dict] = None,
                         case=None) -> tuple:
    """Build the document for an element or realization and serialize it.

    `index` resolves referenced elements (a realization's blueprint and
    measure); with `case`, CSV and JSON artifacts are inlined.
    """
    try:
        fmt = DocFormat(fmt)
    except ValueError:
        raise RenderError(f"unsupported documentation format {fmt!r}")
    document = build_document(element, utc_offset_minutes, index, case)
    text = to_html(document) if fmt is DocFormat.HTML else to_markdown(document)
    return document, text


# ---------------- PUBLISHING ---------------- #

def next_documentation_timestamp(element: AcElement, at: Optional[int] = None) -> int:
    """Current epoch, moved forward past any documentation version already taken."""
    taken = {record.timestamp for record in element.documentation}
    timestamp = now_epoch(at)
    while timestamp in taken:
        timestamp += 1
    return timestamp


def publish(case, element: AcElement, text: str, record: DocumentationRecord) -> AcElement:
    """Write the rendered file and append its documentation record.

    If recording fails the written file is removed again.
    """
    suffix = FORMAT_SUFFIX[record.format.value]
    path = store.write_document(case, element.id, record.timestamp, suffix, text)
    if path != record.path:
        raise RenderError(f"documentation path {path} does not match the record ({record.path})")
    try:
        updated = store.record_documentation(case, element.id, record)
    except AcForgeError:
        (case.root / path).unlink(missing_ok=True)
        raise
    logger.info(f"Published {record.format.value} documentation for {element.id} at {path}")
    return updated


def create_documentation(case, element_id: str, fmt: Union[str, DocFormat] = DocFormat.HTML,
                         utc_offset_minutes: int = 0, at: Optional[int] = None) -> DocumentationRecord:
    """Render an element with its new documentation row included, then publish it."""
    fmt = DocFormat(fmt)
    index = store.index(case)
    element = store.load(case, element_id)
    timestamp = next_documentation_timestamp(element, at)
    relative = (PurePosixPath("docs") / element_id / f"{timestamp}.{FORMAT_SUFFIX[fmt.value]}").as_posix()
    record = DocumentationRecord.create(
        timestamp=timestamp,
        data_model_version=getattr(element, "data_model_version", ""),
        fmt=fmt,
        path=relative,
        utc_offset_minutes=utc_offset_minutes,
    )
    pending = dataclasses.replace(
        element, documentation=sorted(list(element.documentation) + [record], key=lambda r: r.timestamp)
    )
    _, text = render_documentation(pending, fmt, utc_offset_minutes, index=index, case=case)
    publish(case, element, text, record)
    return record
