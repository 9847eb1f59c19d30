"""Private quantum transfer protocols, entropies, channels and rate bounds."""

__version__ = "0.1.0"
