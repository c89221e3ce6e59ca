# app/services/analysis_service.py
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from app.models.analysis import AnalysisConfig, AnalysisReport
from app.models.contract import ContractAst
from app.services.abstraction_service import abstraction_engine
from app.services.contract_game_service import ContractGame, translate_game_interface
from app.services.corpus_service import corpus_service
from app.services.frontend_service import ValidatedContract, apply_overrides, contract_frontend
from app.utils.errors import ConfigError, ContractValidationError, ResourceLimitError
from app.utils.helpers import helpers
from app.utils.validators import Validators

logger = logging.getLogger(__name__)


class AnalysisService:
    """Runs the whole pipeline: parse, validate, translate, abstract and refine"""

    # ===== LOADING =====

    @staticmethod
    def read_source(config: AnalysisConfig) -> Tuple[str, str]:
        """Source text and the path used in diagnostics"""
        if config.source is not None:
            return config.source, "<input>"
        try:
            return Path(config.contract_path).read_text(encoding="utf-8"), config.contract_path
        except OSError as e:
            raise ConfigError(f"cannot read contract {config.contract_path}: {e}")

    @staticmethod
    def load_contract(source: str, path: str = "<input>") -> ValidatedContract:
        """Parse and validate; raises ContractValidationError with every diagnostic"""
        ast = contract_frontend.parse(source)
        result = contract_frontend.validate(ast)
        if isinstance(result, list):
            logger.info(f"⚠️ {len(result)} diagnostics in {path}:\n{helpers.render_diagnostics(result, path)}")
            raise ContractValidationError(result)
        return result

    def build_game(self, config: AnalysisConfig) -> Tuple[ContractGame, List[str]]:
        source, path = self.read_source(config)
        validated = self.load_contract(source, path)
        warnings = [d.render(path) for d in validated.warnings]
        ok, message = Validators.validate_party_count(config.parties, validated.ast.party_literals(), config.party)
        if not ok:
            raise ConfigError(message)
        ast: ContractAst = apply_overrides(validated.ast, config.overrides)
        game = translate_game_interface(ast, config.party, config.objective, config.parties)
        return game, warnings

    # ===== ANALYSIS =====

    def run(self, config: AnalysisConfig) -> AnalysisReport:
        """Analyze one contract and optionally write the report"""
        game, warnings = self.build_game(config)
        name = game.semantics.ast.name
        logger.info(f"🚀 Analyzing {name} for party {config.party}: k={config.parties}, "
                    f"granularity={config.granularity}, max_iters={config.max_iters}, parts={config.refine_parts}")

        with helpers.timer() as elapsed:
            outcome = abstraction_engine.analyze(
                game,
                granularity=config.granularity,
                max_iters=config.max_iters,
                target_gap=config.target_gap,
                parts=config.refine_parts,
            )
        warnings.extend(outcome.warnings)

        exact = None
        if config.exact:
            try:
                exact = game.value()
            except ResourceLimitError as e:
                logger.warning(f"⚠️ Skipping the exact value: {e}")
                warnings.append(f"exact value skipped: {e}")

        report = AnalysisReport(
            contract=name,
            config=config,
            iterations=outcome.iterations,
            verdict=outcome.verdict,
            exact=exact,
            warnings=warnings,
        )
        logger.info(f"✅ {name}: {helpers.format_bounds(report.lower, report.upper)} "
                    f"({report.verdict}) in {helpers.format_elapsed(elapsed[0])}")

        if config.report_path:
            self.write_report(report, config.report_path, config.report_format)
        return report

    def corpus_run(self, name: str, overrides: Optional[Dict[str, Tuple[int, int]]] = None,
                   **options) -> AnalysisReport:
        """Run a bundled contract with its documented settings; overrides are merged on top"""
        entry = corpus_service.get(name)
        merged = dict(entry.overrides)
        merged.update(overrides or {})
        parts = options.pop("refine_parts", None) or entry.refine_parts
        if parts is not None:
            options["refine_parts"] = parts
        config = AnalysisConfig(
            source=corpus_service.source(name),
            party=entry.party,
            objective=entry.objective,
            parties=entry.parties,
            granularity=options.pop("granularity", entry.granularity),
            overrides=merged,
            **options,
        )
        return self.run(config)

    # ===== REPORTS =====

    @staticmethod
    def render_report(report: AnalysisReport, fmt: str = "json") -> str:
        if fmt == "json":
            return report.model_dump_json(indent=2)
        if fmt != "text":
            raise ConfigError(f"unknown report format '{fmt}'")

        lines = [
            f"Contract:  {report.contract}",
            f"Party:     {report.config.party}   objective: {report.config.objective}",
            f"Parties:   {report.config.parties}",
            "",
            f"{'iter':>4}  {'states':>8}  {'lower':>14}  {'upper':>14}  {'time':>8}  refined",
        ]
        for bounds in report.iterations:
            refined = "-" if bounds.refined_label is None else str(bounds.refined_label)
            lines.append(
                f"{bounds.iteration:>4}  {bounds.states:>8}  {str(bounds.lower):>14}  "
                f"{str(bounds.upper):>14}  {helpers.format_elapsed(bounds.elapsed):>8}  {refined}"
            )
        lines.append("")
        lines.append(f"Bounds:    {helpers.format_bounds(report.lower, report.upper)}")
        lines.append(f"Verdict:   {report.verdict}")
        if report.exact is not None:
            lines.append(f"Exact:     {helpers.format_rational(report.exact)}")
        for warning in report.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines) + "\n"

    def write_report(self, report: AnalysisReport, path: str, fmt: str = "json") -> None:
        try:
            Path(path).write_text(self.render_report(report, fmt), encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot write report {path}: {e}")
        logger.info(f"📝 Report written to {path}")

    @staticmethod
    def load_report(text: str) -> AnalysisReport:
        return AnalysisReport.model_validate_json(text)


# Singleton instance
analysis_service = AnalysisService()
