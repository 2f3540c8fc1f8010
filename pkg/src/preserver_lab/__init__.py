"""Numerical checks, constructions and conjugator recovery for matrix preserver maps
on rank-bounded matrix sets."""

__version__ = "0.1.0"
