"""Parabolic Anderson model on Galton-Watson trees with double-exponential potentials.

Modules
-------
graph        graphs, rooted trees, balls, components, tree animals
gw           offspring laws, tree sampling, growth rate, degree envelope
potential    potential sampling, exceedance levels, islands
spectral     Dirichlet eigenpairs, sandwich and exit-mass bounds
variational  the constant χ by primal and dual optimisation
solver       PAM solutions: matrix exponential, spectral, Feynman-Kac
excursions   path evaluation and excursion decomposition bounds
asymptotics  predicted growth rate, F_t optimiser, finite-time experiment
cli          config-driven runner (``pamtree`` console script)
"""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DomainError, InputError, PamtreeError,  # noqa: F401
                     ResourceError, UnsupportedError)
from .graph import Graph, RootedTree, ball, homogeneous_tree  # noqa: F401
from .gw import OffspringLaw, sample_tree  # noqa: F401
from .potential import PotentialField, islands, sample_potential  # noqa: F401
from .spectral import principal_eigenpair  # noqa: F401
