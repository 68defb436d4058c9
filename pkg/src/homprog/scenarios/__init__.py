"""Bundled scenario configs (JSON)."""
