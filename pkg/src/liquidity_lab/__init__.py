"""Liquidity-adjusted returns, ARMA-GARCH forecasting and mean-variance backtests."""
__version__ = "0.1.0"
