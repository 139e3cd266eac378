"""
phmin: minimal phase-type representations of rational Laplace-Stieltjes transforms.
"""

from shared import __version__

__all__ = ["__version__"]
