"""
JunctionWalk - Bayesian structure learning of decomposable graphs by MCMC on junction trees
"""

__version__ = "0.1.0"
