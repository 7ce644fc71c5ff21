from database import store

__all__ = ["store"]
