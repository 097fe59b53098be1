"""One module per estimator; :mod:`src.workflows` maps method tags to them."""

from src.methods.benchmarks import BENCHMARKS, fit_benchmark
from src.methods.postpi_boot import fit_postpi_boot
from src.methods.ppi import fit_ppi
from src.methods.ppi_plusplus import fit_ppi_plusplus
from src.methods.pspa import fit_pspa
from src.methods.result import IpdFit

__all__ = [
    "BENCHMARKS",
    "IpdFit",
    "fit_benchmark",
    "fit_postpi_boot",
    "fit_ppi",
    "fit_ppi_plusplus",
    "fit_pspa",
]
