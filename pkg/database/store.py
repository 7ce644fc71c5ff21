"""Versioned, file-backed persistence for one assurance case.

A case directory has a fixed layout::

    elements/claim/<id>.json
    elements/measure/<id>.json
    elements/blueprint/<id>.json
    realizations/<id>.json
    artifacts/<realization_id>/<name>
    docs/<element_id>/<timestamp>.<ext>

Every write goes to a temp file in the target directory and is renamed into
place, so readers never see partial files. Mutations hold an advisory lock file.
"""

import dataclasses
import json
import os
import shutil
import tempfile
from contextlib import contextmanager, suppress
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

from ac_model import AcElement, DocumentationRecord, ElementKind
from config import LOGGER
from errors import (
    AlreadyExistsError,
    CaseLockedError,
    DuplicateTimestampError,
    ElementError,
    InvariantViolationError,
    KindMismatchError,
    NotFoundError,
    StillReferencedError,
    StoreError,
)
from helper_func import ID_PATTERN, canonical_json, now_epoch

logger = LOGGER(__name__)

LOCK_NAME = ".acforge.lock"
KIND_DIRS = {
    ElementKind.CLAIM: Path("elements", "claim"),
    ElementKind.MEASURE: Path("elements", "measure"),
    ElementKind.BLUEPRINT: Path("elements", "blueprint"),
    ElementKind.REALIZATION: Path("realizations"),
}


def _folder_id(element_id) -> str:
    if not isinstance(element_id, str) or not ID_PATTERN.match(element_id):
        raise StoreError(f"malformed id {element_id!r}: refusing to build a path from it")
    return element_id


@dataclass(frozen=True)
class CaseDirectory:
    root: Path

    def element_path(self, kind: ElementKind, element_id: str) -> Path:
        return self.root / KIND_DIRS[kind] / f"{element_id}.json"

    def artifacts_dir(self, realization_id: str) -> Path:
        return self.root / "artifacts" / _folder_id(realization_id)

    def docs_dir(self, element_id: str) -> Path:
        return self.root / "docs" / _folder_id(element_id)

    def relative(self, path: Path) -> str:
        return Path(path).relative_to(self.root).as_posix()

    @property
    def initialized(self) -> bool:
        return all((self.root / d).is_dir() for d in KIND_DIRS.values())


# ---------------- CASE MANAGEMENT ---------------- #

def init_case(root: Union[str, Path]) -> CaseDirectory:
    """Create the case layout; existing content is left alone."""
    case = CaseDirectory(Path(root))
    for sub in list(KIND_DIRS.values()) + [Path("artifacts"), Path("docs")]:
        (case.root / sub).mkdir(parents=True, exist_ok=True)
    logger.info(f"Case directory ready at {case.root}")
    return case


def open_case(root: Union[str, Path]) -> CaseDirectory:
    case = CaseDirectory(Path(root))
    if not case.initialized:
        raise StoreError(f"{case.root} is not an acforge case directory (run `init` first)")
    return case


@contextmanager
def case_lock(case: CaseDirectory):
    """Single-writer guard for a case directory."""
    lock_path = case.root / LOCK_NAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise CaseLockedError(f"case {case.root} is locked by another writer ({lock_path})")
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        yield
    finally:
        os.close(fd)
        with suppress(FileNotFoundError):
            os.unlink(lock_path)


def atomic_write(path: Path, data: Union[str, bytes]) -> None:
    """Write-temp-then-rename; on failure the previous file content is untouched."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except OSError as e:
        with suppress(FileNotFoundError):
            os.unlink(tmp)
        raise StoreError(f"could not write {path}: {e}") from e


# ---------------- READING ---------------- #

def _locate(case: CaseDirectory, element_id: str) -> Optional[tuple]:
    if not isinstance(element_id, str) or not ID_PATTERN.match(element_id):
        return None
    for kind in KIND_DIRS:
        path = case.element_path(kind, element_id)
        if path.is_file():
            return kind, path
    return None


def _read(path: Path, kind: ElementKind) -> AcElement:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as e:
        raise StoreError(f"could not read {path}: {e}")
    except json.JSONDecodeError as e:
        raise StoreError(f"parse error in {path}: {e}")
    if not isinstance(payload, dict):
        raise StoreError(f"parse error in {path}: expected one JSON object")
    if payload.get("kind") != kind.value:
        raise KindMismatchError(f"{path} holds a {payload.get('kind')!r}, expected {kind.value}")
    if payload.get("id") != path.stem:
        raise InvariantViolationError(f"{path}: id {payload.get('id')!r} does not match its file name")
    try:
        element = AcElement.from_dict(payload)
        element.check(strict=False)
    except ElementError as e:
        raise InvariantViolationError(f"{path}: {e}")
    return element


def exists(case: CaseDirectory, element_id: str) -> bool:
    return _locate(case, element_id) is not None


def load(case: CaseDirectory, element_id: str, kind=None) -> AcElement:
    """Load one element; `kind` restricts what is acceptable."""
    located = _locate(case, element_id)
    if located is None:
        raise NotFoundError(f"no element with id {element_id!r} in {case.root}")
    found_kind, path = located
    if kind is not None and ElementKind(kind) is not found_kind:
        raise KindMismatchError(f"{element_id} is a {found_kind.value}, not a {ElementKind(kind).value}")
    return _read(path, found_kind)


def iter_elements(case: CaseDirectory, kind=None) -> Iterator[AcElement]:
    kinds = [ElementKind(kind)] if kind is not None else list(KIND_DIRS)
    for each in kinds:
        folder = case.root / KIND_DIRS[each]
        if not folder.is_dir():
            continue
        for path in sorted(folder.glob("*.json")):
            yield _read(path, each)


def index(case: CaseDirectory) -> dict:
    """All stored elements keyed by id."""
    return {element.id: element for element in iter_elements(case)}


# ---------------- WRITING ---------------- #

def _save_unlocked(case: CaseDirectory, element: AcElement, overwrite: bool,
                   now: Optional[int], check_refs: bool) -> Path:
    try:
        element.check(strict=True)
    except ElementError as e:
        raise InvariantViolationError(f"refusing to save invalid {element.kind.value}: {e}")

    located = _locate(case, element.id)
    path = case.element_path(element.kind, element.id)
    if located is not None:
        found_kind, _ = located
        if found_kind is not element.kind:
            raise KindMismatchError(f"id {element.id!r} is already used by a {found_kind.value}")
        if not overwrite:
            raise AlreadyExistsError(f"{element.kind.value} {element.id} exists; pass overwrite to replace it")
        stored = _read(path, found_kind)
        version = max(now_epoch(now), stored.element_version + 1)
        history = stored.versions() + [version]
    else:
        version = element.element_version or now_epoch(now)
        history = [v for v in element.version_history if v < version] + [version]

    if check_refs:
        known = {e.id for e in iter_elements(case)}
        dangling = sorted(ref for ref in element.references() if ref not in known and ref != element.id)
        if dangling:
            raise InvariantViolationError(
                f"{element.kind.value} {element.id} references unknown id(s): {', '.join(dangling)}"
            )

    written = dataclasses.replace(element, element_version=version, version_history=history)
    atomic_write(path, canonical_json(written.to_dict()))
    element.element_version = version
    element.version_history = history
    logger.info(f"Saved {element.kind.value} {element.id} at version {version}")
    return path


def save(case: CaseDirectory, element: AcElement, overwrite: bool = False,
         now: Optional[int] = None, check_refs: bool = True) -> Path:
    """Persist an element atomically.

    A re-save with overwrite stamps version max(now, previous + 1). The passed
    element's version fields are updated to what was written.
    """
    with case_lock(case):
        return _save_unlocked(case, element, overwrite, now, check_refs)


def referrers(case: CaseDirectory, element_id: str) -> list:
    return sorted(e.id for e in iter_elements(case) if e.id != element_id and element_id in e.references())


def delete(case: CaseDirectory, element_id: str) -> None:
    """Remove an element nobody else references."""
    with case_lock(case):
        located = _locate(case, element_id)
        if located is None:
            raise NotFoundError(f"no element with id {element_id!r} in {case.root}")
        kind, path = located
        users = referrers(case, element_id)
        if users:
            logger.warning(f"Refused to delete {element_id}: referenced by {', '.join(users)}")
            raise StillReferencedError(f"{element_id} is still referenced by {', '.join(users)}")
        path.unlink()
        if kind is ElementKind.REALIZATION:
            shutil.rmtree(case.artifacts_dir(element_id), ignore_errors=True)
        logger.info(f"Deleted {kind.value} {element_id}")


def record_documentation(case: CaseDirectory, element_id: str, record: DocumentationRecord,
                         now: Optional[int] = None) -> AcElement:
    """Append a documentation version to an element or realization and re-save it."""
    with case_lock(case):
        element = load(case, element_id)
        docs_root = (case.root / "docs").resolve()
        doc_path = (case.root / record.path).resolve()
        if docs_root not in doc_path.parents or not doc_path.is_file():
            raise StoreError(f"documentation file {record.path} does not exist under docs/")
        if any(existing.timestamp == record.timestamp for existing in element.documentation):
            raise DuplicateTimestampError(f"{element_id} already has documentation version {record.timestamp}")
        try:
            record.check()
        except ElementError as e:
            raise InvariantViolationError(str(e))
        records = sorted(list(element.documentation) + [record], key=lambda r: r.timestamp)
        updated = dataclasses.replace(element, documentation=records)
        _save_unlocked(case, updated, overwrite=True,
                       now=record.timestamp if now is None else now, check_refs=False)
        logger.info(f"Recorded documentation {record.timestamp} ({record.format.value}) for {element_id}")
        return updated


# ---------------- ARTIFACTS ---------------- #

def write_artifact(case: CaseDirectory, realization_id: str, name: str, content: Union[str, bytes]) -> str:
    """Store an opaque artifact file and return its case-relative path."""
    path = case.root / artifact_path(case, realization_id, name)
    with case_lock(case):
        atomic_write(path, content)
    return case.relative(path)


def artifact_path(case: CaseDirectory, realization_id: str, name: str) -> str:
    if not name or "/" in name or "\\" in name or name.startswith("."):
        raise StoreError(f"invalid artifact name {name!r}")
    return case.relative(case.artifacts_dir(realization_id) / name)


def commit_realization(case: CaseDirectory, realization: AcElement, artifacts: dict,
                       overwrite: bool = False, now: Optional[int] = None) -> Path:
    """Store a realization together with the complete set of its artifact files.

    The files are written to a staging folder first. The staging folder replaces
    artifacts/<id>/ only while the realization itself is saved; if that save
    fails the previous folder is put back.
    """
    target = case.artifacts_dir(realization.id)
    for name in artifacts:
        artifact_path(case, realization.id, name)
    target.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=target.parent, prefix=f".{realization.id}.", suffix=".staging"))
    try:
        for name, content in sorted(artifacts.items()):
            atomic_write(staging / name, content)
        with case_lock(case):
            previous = None
            if target.exists():
                previous = target.with_name(f"{staging.name}.previous")
                os.replace(target, previous)
            os.replace(staging, target)
            try:
                path = _save_unlocked(case, realization, overwrite, now, check_refs=True)
            except BaseException:
                shutil.rmtree(target, ignore_errors=True)
                if previous is not None:
                    os.replace(previous, target)
                raise
            if previous is not None:
                shutil.rmtree(previous, ignore_errors=True)
    except OSError as e:
        raise StoreError(f"could not place artifacts of {realization.id}: {e}") from e
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    logger.info(f"Committed {len(artifacts)} artifact(s) for {realization.id}")
    return path


def read_artifact(case: CaseDirectory, relative_path: str) -> str:
    path = case.root / relative_path
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise NotFoundError(f"artifact {relative_path} is missing: {e}")


def write_document(case: CaseDirectory, element_id: str, timestamp: int, suffix: str, text: str) -> str:
    path = case.docs_dir(element_id) / f"{timestamp}.{suffix}"
    with case_lock(case):
        atomic_write(path, text)
    return case.relative(path)
