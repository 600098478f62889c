"""dworktheta - exact p-adic certificates for Dwork translates and the theta divisor."""

__version__ = "0.1.0"

from .cli import main

__all__ = ["main", "__version__"]
