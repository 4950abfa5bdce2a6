"""Batch execution of parameter grids."""
