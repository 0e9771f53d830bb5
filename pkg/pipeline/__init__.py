"""
Pipeline Module - Orchestration of the identifiability analysis
"""

from .identifiability_pipeline import IdentifiabilityPipeline
from .report_models import AnalysisReport, LinearizationReport, Verdict, composite_verdict

__all__ = [
    "IdentifiabilityPipeline",
    "AnalysisReport",
    "LinearizationReport",
    "Verdict",
    "composite_verdict",
]
