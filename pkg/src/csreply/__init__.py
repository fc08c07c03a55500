"""Smart-reply suggestion engine for code-switched conversations."""

__version__ = "0.1.0"
