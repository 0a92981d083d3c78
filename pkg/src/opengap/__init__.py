"""Numerical experiments for open hyperbolic maps and their quantizations.

Subpackages and modules:

* :mod:`opengap.classical` - open maps (linear, baker, disk billiards), word Jacobians
* :mod:`opengap.splitting` - graph transform for the unstable/stable slope fields
* :mod:`opengap.thermo` - pressure, Bowen root, box counting, porosity, exponent bookkeeping
* :mod:`opengap.quantum` - semiclassical Fourier transform, model open map, open baker
* :mod:`opengap.fup` - fractal uncertainty norms
* :mod:`opengap.runner` / :mod:`opengap.cli` - config-driven experiments
"""

from .errors import ConfigurationError, EmptyNeighborhoodError, EscapeError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "EmptyNeighborhoodError", "EscapeError", "NumericalError", "__version__"]
