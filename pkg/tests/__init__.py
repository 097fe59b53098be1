# tests/__init__.py

# This file can remain empty; it ensures that the `tests/` directory is
# recognized as a Python package by pytest.
