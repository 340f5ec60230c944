"""Test package for tools."""
