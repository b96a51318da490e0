"""
Domain layer package.

This is the core of the application containing:
- Substrate and request networks (SubstrateNetwork, ServiceRequest)
- Value objects (TrustValue, AugmentedPath, Allocation)
- Embedding solutions, validation reports and solver results
- Domain errors

This layer is independent of all other layers.
"""

from .models import (
    AugmentedPath,
    EmbeddingSolution,
    ServiceRequest,
    SubstrateNetwork,
    TrustValue,
    Variant,
)

__all__ = [
    "AugmentedPath", "EmbeddingSolution", "ServiceRequest", "SubstrateNetwork", "TrustValue", "Variant",
]
