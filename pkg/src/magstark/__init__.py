"""Magnetic Stark resonances: distortion, well surgery, eigen-solvers and
desk-scale verification experiments."""
__version__ = "0.1.0"
