"""
API endpoints package.

Contains the HTTP routers:
- embedding.py - single-request embedding and path listing

Request and response documents live in presentation/schemas.py.
"""

from .embedding import router as embedding_router

__all__ = [
    "embedding_router"
]
