"""
uss-sim - unsupervised sensor selection simulator.
"""
__version__ = "0.1.0"
