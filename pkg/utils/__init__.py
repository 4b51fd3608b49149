"""Utilities for the ntest toolkit."""
