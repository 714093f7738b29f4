"""Twin validation, risk measures and hedging sensitivities."""

from .hedging import (EcConfig, EcResult, HedgeData, build_runoff_loss, build_runon_loss,
                      compression_report, ec_sensitivities, hedge_metrics, ls_sensitivities,
                      ple_sensitivities, report_to_csv, rockafellar_objective, runoff_data)
from .measures import LEVELS, RiskReport, quadratic_proxy_risk, var_es
from .twin import TwinReport, twin_validate

__all__ = [
    "EcConfig", "EcResult", "HedgeData", "LEVELS", "RiskReport", "TwinReport",
    "build_runoff_loss", "build_runon_loss", "compression_report", "ec_sensitivities",
    "hedge_metrics", "ls_sensitivities", "ple_sensitivities", "quadratic_proxy_risk",
    "report_to_csv", "rockafellar_objective", "runoff_data", "twin_validate", "var_es",
]
