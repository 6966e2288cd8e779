"""Top-level package for septrans."""

# septrans/__init__.py

__app_name__ = "septrans"
__version__ = "0.1.0"
