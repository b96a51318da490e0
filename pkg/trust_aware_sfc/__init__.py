"""Trust-aware service function chain embedding: models, solvers, simulator, CLI and HTTP API."""

__version__ = "1.0.0"
