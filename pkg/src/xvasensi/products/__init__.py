"""Analytic pricing of bonds, swaps, FX forwards, CDS and the basket oracle."""

from .affine import cir_survival, vasicek_AB, zc_bond_price
from .basket import BasketGreeks, BasketSpec, basket_call_analytic, basket_payoff, basket_payoff_fn
from .instruments import (InstrumentSet, cumulative_cashflows, instrument_prices,
                          pathwise_prices)
from .swaps import (Portfolio, PortfolioSpec, Swap, generate_portfolio, par_strike,
                    portfolio_mtm, swap_value)

__all__ = [
    "BasketGreeks", "BasketSpec", "InstrumentSet", "Portfolio", "PortfolioSpec", "Swap",
    "basket_call_analytic", "basket_payoff", "basket_payoff_fn", "cir_survival",
    "cumulative_cashflows", "generate_portfolio", "instrument_prices", "par_strike",
    "pathwise_prices", "portfolio_mtm", "swap_value", "vasicek_AB", "zc_bond_price",
]
