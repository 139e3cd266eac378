"""
Shared configuration, models and utilities for the phmin solver.
"""

__version__ = "1.0.0"
