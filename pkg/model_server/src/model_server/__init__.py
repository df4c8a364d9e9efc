"""Reference model server for the docforge recognition wire protocol."""

from .app import create_app
from .config import NoiseParams, ServerConfig
from .noise import degrade, derive_seed

__all__ = ["NoiseParams", "ServerConfig", "create_app", "degrade",
           "derive_seed"]
