"""Identifier normalization shared by ingestion, the rule DSL, and the KB.

Source texts and rule constants arrive in wildly mixed conventions
("Grief_Avoidance", "extremitiesMassage", "Taskīn-i Dard"); everything is
folded into one lower_snake id grammar so rule constants join against KB
node ids without case or diacritic games.
"""

from __future__ import annotations

import re
import unicodedata

ID_RE = re.compile(r"[a-z][a-z0-9_]*\Z")

_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")
_NON_ALNUM_RUN = re.compile(r"[^a-z0-9]+")


def ascii_fold(text: str) -> str:
    """Strip diacritics, keeping the base ASCII letters ("Shaqīqa" -> "Shaqiqa")."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def normalize_id(text: str) -> str:
    """Fold arbitrary surface text into a lower_snake identifier.

    Camel-case boundaries become underscores before lowercasing, so
    "extremitiesMassage" -> "extremities_massage" and
    "Physical_&mentalRest" -> "physical_mental_rest".
    """
    folded = ascii_fold(text.strip())
    spaced = _CAMEL_BOUNDARY.sub("_", folded).lower()
    collapsed = _NON_ALNUM_RUN.sub("_", spaced)
    return collapsed.strip("_")


def is_valid_id(text: str) -> bool:
    return bool(ID_RE.match(text))


def require_valid_id(text: str, what: str = "identifier") -> str:
    if not is_valid_id(text):
        raise ValueError(f"malformed {what} {text!r}: must match [a-z][a-z0-9_]*")
    return text
