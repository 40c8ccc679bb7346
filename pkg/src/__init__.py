"""Whitham breaking: pseudospectral simulation and hypothesis checks for the
fractional-dispersion Whitham equation u_t + HΛ^α u + u u_x = 0."""

__version__ = "0.1.0"
