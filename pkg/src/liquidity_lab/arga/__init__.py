"""ARMA-GARCH/EGARCH estimation, forecasting and unit-root testing."""
from .adf import DEFAULT_CRITICAL_VALUES, AdfResult, adf_pvalue, adf_test
from .arma import ArmaFitError, ArmaSpec, arma_filter, arma_forecast, fit_arma, fit_arma_order, simulate_arma
from .model import (FORECAST_CSV_COLUMNS, ModelFit, ScalingReport, fit_arga, forecast_one_step,
                    read_forecast_csv, rmse, rolling_forecast, scaling_identity_check,
                    write_forecast_csv)
from .volatility import (EgarchParams, GarchParams, VolatilityFitError, VolFit, filter_volatility,
                         fit_egarch, fit_garch, fit_volatility, simulate_garch)

__all__ = [
    "AdfResult", "ArmaFitError", "ArmaSpec", "DEFAULT_CRITICAL_VALUES", "EgarchParams",
    "FORECAST_CSV_COLUMNS", "GarchParams", "ModelFit", "ScalingReport", "VolFit",
    "VolatilityFitError", "adf_pvalue", "adf_test", "arma_filter", "arma_forecast", "filter_volatility",
    "fit_arga", "fit_arma", "fit_arma_order", "fit_egarch", "fit_garch", "fit_volatility",
    "forecast_one_step", "read_forecast_csv", "rmse", "rolling_forecast", "scaling_identity_check",
    "simulate_arma", "simulate_garch", "write_forecast_csv",
]
