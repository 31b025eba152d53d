from . import cli

__all__ = [
    "cli"
]
