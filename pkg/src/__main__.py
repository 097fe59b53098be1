"""`python -m src` → the ``ipd`` command line."""

from src.main import main

main()
