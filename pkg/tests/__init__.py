"""Test package for AutoDev Agents."""
