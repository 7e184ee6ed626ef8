"""Self-supervised 24-key tonality estimation."""

__version__ = "0.1.0"
