"""CLI namespace package."""
