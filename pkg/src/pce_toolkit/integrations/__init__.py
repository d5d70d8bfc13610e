"""Adapters for detection sources and on-disk layout."""
