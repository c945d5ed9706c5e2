"""Reference-less robustness evaluation of MT output on grammatical-error corpora."""

__version__ = "0.1.0"
