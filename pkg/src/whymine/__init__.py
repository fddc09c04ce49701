"""whymine: mine because-pairs, rewrite why-questions, train explanation generators."""

__version__ = "0.1.0"
