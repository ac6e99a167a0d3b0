"""Activity knowledge mining from POS-tagged fiction corpora."""

__version__ = "0.1.0"
