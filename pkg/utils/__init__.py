from collections.abc import Iterable
from typing import Optional

from rapidfuzz import fuzz, process

# Minimum QRatio score for a suggestion to be offered.
SUGGESTION_CUTOFF = 60.0


def closest_match(query: str, choices: Iterable[str]) -> Optional[str]:
    """The choice most similar to ``query``, or None if nothing is close."""
    choices = list(choices)
    if not choices:
        return None

    result = process.extractOne(
        query,
        choices,
        scorer=fuzz.QRatio,
        processor=str.lower,
        score_cutoff=SUGGESTION_CUTOFF,
    )
    if result is None:
        return None

    (match, _, _) = result
    return match
