"""Test package for septrans."""
