"""Shared infrastructure: errors, canonical serialization, hashing, config."""
