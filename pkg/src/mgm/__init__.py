"""Memory-augmented variational-EM node classification for media graphs."""

__version__ = "0.1.0"
