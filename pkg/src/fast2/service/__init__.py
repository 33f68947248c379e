from .app import create_app
from .store import SessionStore, write_atomic

__all__ = ["create_app", "SessionStore", "write_atomic"]
