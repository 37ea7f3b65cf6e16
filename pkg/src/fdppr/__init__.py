"""Recovery-based error indicators for finite-difference solutions."""

__version__ = "0.1.0"
