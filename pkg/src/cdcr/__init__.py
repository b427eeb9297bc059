"""Cross-document coreference resolution: extraction, matching, clustering and scoring."""

__version__ = "0.1.0"
