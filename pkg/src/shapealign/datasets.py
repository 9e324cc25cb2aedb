"""Accessors for the data bundled with the package.

Bundled sets:
  * rat skull landmarks, one CSV per timepoint (2-D, labeled landmarks);
  * synthetic C-alpha fixtures for the CATH domains 2VLWA00, 1FASA00 and
    1M9ZA00, in the SSE fixture format, with a curation manifest.

See data/README.md for provenance details.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .core import Configuration, read_configuration_csv
from .protein import SSERecord, parse_sse_file

RAT_TIMEPOINTS = tuple(range(1, 9))
SSE_DOMAINS = ("2VLWA00", "1FASA00", "1M9ZA00")


def _data_root() -> Path:
    return Path(resources.files("shapealign.data"))


def rat_csv_path(timepoint: int) -> Path:
    if timepoint not in RAT_TIMEPOINTS:
        raise ValueError(f"timepoint must be in {RAT_TIMEPOINTS}")
    return _data_root() / "rat" / f"rat1_t{timepoint}.csv"


def rat_configuration(timepoint: int) -> Configuration:
    return read_configuration_csv(rat_csv_path(timepoint))


def sse_fixture_path(domain: str) -> Path:
    if domain not in SSE_DOMAINS:
        raise ValueError(f"domain must be one of {SSE_DOMAINS}")
    return _data_root() / "sse" / f"{domain}.sse"


def load_sse_domain(domain: str) -> list[SSERecord]:
    return parse_sse_file(sse_fixture_path(domain))


def sse_manifest() -> dict:
    return json.loads((_data_root() / "sse" / "manifest.json").read_text())
