"""Bundled example scenes (YAML)."""
