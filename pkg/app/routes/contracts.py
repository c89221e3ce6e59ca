# app/routes/contracts.py
from fastapi import APIRouter
from typing import List
import logging

from app.models.analysis import CfgRequest, CfgResponse, ContractRequest, ParseResponse
from app.models.diagnostic import Diagnostic
from app.services.cfg_service import cfg_builder
from app.services.frontend_service import apply_overrides, contract_frontend
from app.utils.errors import AnalyzerError
from app.utils.validators import to_http_exception

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/contracts", tags=["Contracts"])


@router.post("/parse", response_model=ParseResponse)
async def parse_contract(request: ContractRequest):
    """Parse a contract and return its outline and canonical text"""
    try:
        ast = apply_overrides(contract_frontend.parse(request.source), request.overrides)
        logger.info(f"📝 Parsed contract {ast.name}")
        return ParseResponse(
            name=ast.name,
            functions=[fn.name for fn in ast.functions],
            numerics=[d.name for d in ast.numerics],
            maps=[d.name for d in ast.maps],
            ids=[d.name for d in ast.ids],
            pretty=contract_frontend.pretty_print(ast),
        )
    except AnalyzerError as e:
        raise to_http_exception(e)


@router.post("/validate", response_model=List[Diagnostic])
async def validate_contract(request: ContractRequest):
    """Every diagnostic of the contract; an empty list means it is valid"""
    try:
        ast = contract_frontend.parse(request.source)
    except AnalyzerError as e:
        raise to_http_exception(e)
    result = contract_frontend.validate(ast)
    diagnostics = result if isinstance(result, list) else list(result.warnings)
    logger.info(f"📝 Validated contract {ast.name}: {len(diagnostics)} diagnostic(s)")
    return diagnostics


@router.post("/cfg", response_model=List[CfgResponse])
async def contract_cfg(request: CfgRequest):
    """Control flow graphs of one or all functions"""
    try:
        ast = contract_frontend.parse(request.source)
        labeled = cfg_builder.assign_labels(ast)
        if request.function is None:
            graphs = cfg_builder.build_all(labeled)
        else:
            graphs = [cfg_builder.build_cfg(labeled, request.function)]
    except KeyError as e:
        raise to_http_exception(AnalyzerError(str(e.args[0])))
    except AnalyzerError as e:
        raise to_http_exception(e)
    return [
        CfgResponse(
            function=graph.function.decl.name,
            format=request.format,
            graph=cfg_builder.export(labeled, graph, request.format),
            unreachable=sorted(cfg_builder.unreachable_labels(labeled, graph)),
        )
        for graph in graphs
    ]
