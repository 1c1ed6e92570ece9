"""
Tube, tail and density lower bounds for square-root local-stochastic-volatility
models, with Monte Carlo and Fourier-oracle verification.
"""
__version__ = "1.0.0"
