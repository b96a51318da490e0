"""
Presentation layer package.

This package contains all presentation-related modules:
- cli.py - command-line front end
- api/ - HTTP endpoint modules
- schemas.py - versioned pydantic documents for inputs and outputs
- dependencies.py - dependency injection container
"""

from .dependencies import DependencyContainer

__all__ = [
    "DependencyContainer"
]
