"""HTTP service exposing the laboratory operations.

``create_app()`` builds the FastAPI application; the command-line client
drives it either in-process (default) or over the network.
"""

from .app import create_app

__all__ = ["create_app"]
