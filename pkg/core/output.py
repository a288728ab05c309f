"""
Atomic text output for tables and reports
"""

import logging
import os
from pathlib import Path
from typing import Iterable

from . import __version__

logger = logging.getLogger(__name__)


def provenance_header(seed: int, **entries) -> list:
    """`# key=value` lines led by the tool version and seed"""
    lines = [f"# version={__version__}", f"# seed={seed}"]
    lines += [f"# {k}={v}" for k, v in entries.items()]
    return lines


def write_atomic(path, text: str) -> Path:
    """Write text beside the target and rename it into place"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
    return path


def write_report(path, header: Iterable[str], body: str) -> Path:
    """Header lines, then a CSV body, written atomically"""
    path = write_atomic(path, "\n".join(header) + "\n" + body)
    logger.info("Wrote %s", path)
    return path
