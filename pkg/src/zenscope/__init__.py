"""Detect, quantify and visualize pairwise dependence in multivariate series.

The toolkit chains five stages: data ingestion and repair, per-column
ARMA-GARCH de-GARCHing, copula-based dependence measurement, ordering of
interesting variable pairs into zenpaths, and zigzag SVG layouts (zenplots)
of scatter / ACF / Q-Q panels.
"""

__version__ = "0.1.0"

from . import dataset, dependence, gof, margins, zenpath, zenplot  # noqa: F401
