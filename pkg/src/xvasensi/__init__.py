"""Monte Carlo lab for CVA pricing, sensitivities, learning and hedging."""

__version__ = "0.1.0"
