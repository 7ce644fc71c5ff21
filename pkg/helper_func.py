import json
import re
import time
from datetime import datetime, timedelta, timezone
from typing import Optional

from errors import ElementError

ID_PATTERN = re.compile(r"^[a-z0-9_-]{1,64}$")
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
MAX_OFFSET_MINUTES = 14 * 60

# ---------------- CLOCK ---------------- #

def now_epoch(at: Optional[int] = None) -> int:
    """Current epoch seconds, or the pinned value when one is given."""
    if at is not None:
        return int(at)
    return int(time.time())


# ---------------- IDS ---------------- #

def check_id(value, what: str = "id") -> str:
    if not isinstance(value, str) or not ID_PATTERN.match(value):
        raise ElementError(
            f"malformed {what} {value!r}: use 1-64 lowercase letters, digits, '_' or '-'"
        )
    return value


# ---------------- TIMESTAMPS ---------------- #

def _zone(utc_offset_minutes: int) -> timezone:
    if abs(int(utc_offset_minutes)) > MAX_OFFSET_MINUTES:
        raise ValueError(f"UTC offset {utc_offset_minutes} min is outside ±14h")
    return timezone(timedelta(minutes=int(utc_offset_minutes)))


def format_timestamp(epoch: int, utc_offset_minutes: int = 0) -> str:
    """Render epoch seconds as 'YYYY-MM-DD HH:MM:SS' in the given fixed offset."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    moment = datetime.fromtimestamp(int(epoch), tz=_zone(utc_offset_minutes))
    return moment.strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str, utc_offset_minutes: int = 0) -> int:
    """Inverse of format_timestamp."""
    moment = datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=_zone(utc_offset_minutes))
    return int(moment.timestamp())


# ---------------- SERIALIZATION ---------------- #

def canonical_json(payload) -> str:
    """Stable key order, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def coerce_value(text: str):
    """Turn a command-line 'k=v' value into a flag, number or text."""
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null"):
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text
