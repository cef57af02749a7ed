"""Access to versioned asset files shipped with the package."""

from __future__ import annotations

from importlib import resources


def load_stopwords() -> frozenset[str]:
    """The shipped English stop-word list (comment lines ignored)."""
    text = resources.files("hopcheck").joinpath("assets/stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )
