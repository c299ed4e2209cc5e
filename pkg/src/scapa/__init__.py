"""scapa: mine self-claimed and potential assumptions from GitHub repositories."""

__version__ = "0.1.0"
