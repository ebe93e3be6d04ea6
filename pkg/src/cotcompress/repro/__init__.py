"""Embedded reference tables, worked fixtures and the reproduction checks."""
