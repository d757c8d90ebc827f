"""Access-control vulnerability detection over contract knowledge graphs."""

__version__ = "0.1.0"
