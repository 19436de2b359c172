"""Normalization of model output vocabularies to wire labels.

Both tables are shipped as editable JSON data, not code: model or prompt
revisions that rename a verdict string should be absorbed by editing the
table, not by an adapter release.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

_DATA_DIR = Path(__file__).parent / "data"


class MappingError(Exception):
    """Model output cannot be mapped onto a schema-valid response."""


def _load_table(name: str) -> dict[str, str]:
    return json.loads((_DATA_DIR / name).read_text(encoding="utf-8"))


def verdict_table() -> dict[str, str]:
    return _load_table("verdict_map.json")


def class_table() -> dict[str, str]:
    return _load_table("class_map.json")


def fold_verdict(value: str) -> str:
    """Case-fold and collapse separators: "Not-Enough-Information" and
    "not_enough_information" both fold to "not enough information"."""
    return re.sub(r"[\s_\-]+", " ", value.strip().lower())


def normalize_verdict(value: str, table: dict[str, str] | None = None) -> str:
    table = table if table is not None else verdict_table()
    folded = fold_verdict(value)
    if folded not in table:
        raise MappingError(f"verdict string {value!r} is not in the normalization table")
    return table[folded]


def normalize_class(value: str, table: dict[str, str] | None = None) -> str:
    table = table if table is not None else class_table()
    key = value.strip().lower()
    if key not in table:
        raise MappingError(f"class string {value!r} is not in the normalization table")
    return table[key]
