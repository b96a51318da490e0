import logging

from fastapi import APIRouter, Depends, HTTPException, status

from trust_aware_sfc.application.services import EmbeddingService
from trust_aware_sfc.domain.models import SolveBudget
from trust_aware_sfc.presentation.dependencies import DependencyContainer, get_container, get_embedding_service
from trust_aware_sfc.presentation.schemas import (
    EmbedRequestSchema,
    EmbedResponseSchema,
    PathListingSchema,
    PathSchema,
    PathsRequestSchema,
    resolve_path_trust,
)

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post(
    "/embed",
    response_model=EmbedResponseSchema,
    summary="Embed one SFC request",
    description="Solve the path-based (or link-based) embedding MILP for one request on the given substrate",
)
def embed_request(
    body: EmbedRequestSchema,
    service: EmbeddingService = Depends(get_embedding_service),
    container: DependencyContainer = Depends(get_container),
):
    """
    Embed a request.

    **Returns:** the solve status, the placement, per-path flows and the
    cost/revenue accounting. Infeasible requests are answered with status
    `infeasible` and the binding constraint family, not an HTTP error.

    **Raises:** 400 when the documents are inconsistent (unknown endpoints,
    missing path trust, a link-based model with path trust, ...).
    """
    try:
        budget = container.budget
        if body.time_limit is not None:
            budget = SolveBudget(time_limit=body.time_limit, node_limit=budget.node_limit)
        outcome = service.embed(
            body.substrate.to_domain(),
            body.request.to_domain(),
            body.options.to_domain(),
            resolve_path_trust(body.path_trust, body.path_trust_seed),
            budget,
            with_oracle=body.oracle,
        )
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    return EmbedResponseSchema.from_outcome(body.request.id, outcome)


@router.post(
    "/paths",
    response_model=PathListingSchema,
    summary="List candidate paths",
    description="k shortest augmented paths of one commodity with their trust",
)
def list_paths(
    body: PathsRequestSchema,
    service: EmbeddingService = Depends(get_embedding_service),
):
    try:
        options = body.options.to_domain()
        paths = service.list_paths(
            body.substrate.to_domain(),
            body.request.to_domain(),
            body.commodity,
            options,
            resolve_path_trust(body.path_trust, body.path_trust_seed),
        )
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    return PathListingSchema(
        commodity=body.commodity,
        k=options.k,
        trust_policy=options.trust_policy,
        paths=[PathSchema.from_domain(path) for path in paths],
    )
