import os
import logging
from dataclasses import dataclass
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


def _int_env(name: str, default: str) -> int:
    raw = os.environ.get(name, default)
    try:
        return int(raw)
    except ValueError:
        raise Exception(f"{name} must be an integer, got {raw!r}.")


# Case
CASE_DIR = os.environ.get("ACFORGE_CASE_DIR", "case")
UTC_OFFSET_MINUTES = _int_env("ACFORGE_UTC_OFFSET", "0")
OUTPUT_FORMAT = os.environ.get("ACFORGE_FORMAT", "html").lower()

# Techniques
DEFAULT_SEED = _int_env("ACFORGE_SEED", "0")
WORKERS = _int_env("ACFORGE_WORKERS", "4")

#--- ---- ---- --- --- --- - -- -  - - - - - - - - - - - --  - -

OUTPUT_FORMATS = ("html", "markdown")
FORMAT_SUFFIX = {"html": "html", "markdown": "md"}


@dataclass
class CliConfig:
    case_dir: Path
    utc_offset_minutes: int = UTC_OFFSET_MINUTES
    seed: int = DEFAULT_SEED
    output_format: str = OUTPUT_FORMAT
    workers: int = WORKERS
    at: Optional[int] = None

    def __post_init__(self):
        self.case_dir = Path(self.case_dir)
        if abs(self.utc_offset_minutes) > 14 * 60:
            raise ValueError(f"UTC offset {self.utc_offset_minutes} min is outside ±14h")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(f"output format must be one of {', '.join(OUTPUT_FORMATS)}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


# Logging
LOG_FILE_NAME = os.environ.get("ACFORGE_LOG_FILE", "acforge-log.txt")
LOG_LEVEL = os.environ.get("ACFORGE_LOG_LEVEL", "INFO").upper()

logging.basicConfig(
    level=LOG_LEVEL,
    format="[%(asctime)s - %(levelname)s] - %(name)s - %(message)s",
    datefmt='%d-%b-%y %H:%M:%S',
    handlers=[
        RotatingFileHandler(
            LOG_FILE_NAME,
            maxBytes=50000000,
            backupCount=10
        ),
        logging.StreamHandler()
    ]
)
logging.getLogger("matplotlib").setLevel(logging.WARNING)
logging.getLogger("numexpr").setLevel(logging.WARNING)

def LOGGER(name: str) -> logging.Logger:
    return logging.getLogger(name)
