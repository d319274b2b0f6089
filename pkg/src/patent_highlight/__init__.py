"""Highlight advantage / problem / solution paragraphs in patent text."""

__version__ = "0.1.0"
