"""Weighted Alpert wavelets for measures on the line, with two-weight diagnostics.

The main entry points are

* :class:`~alpert.measure.Measure` – atoms plus piecewise-polynomial densities;
* :func:`~alpert.basis.build_alpert` – orthonormal Alpert functions on one interval;
* :func:`~alpert.mra.expand` / :func:`~alpert.mra.reconstruct` – the wavelet transform;
* :func:`~alpert.gram_oracle.gram_basis` – detail spaces built from the definition;
* :mod:`alpert.twoweight` – Poisson integrals, energies and the dyadic test operator.
"""

from .basis import AlpertFunction, ConstructionReport, build_alpert, haar, k2_special, verify_basis
from .grid import DyadicCube, DyadicInterval, cube_at, descendants, interval_at, parse_label
from .gram_oracle import BoxMeasure, gram_basis, projection_form
from .measure import EXACT, FLOAT, Measure, lebesgue, load, loads, point_masses, validate
from .moments import dim_detail_space, moment_matrix, rank_pd
from .mra import (PiecewiseFunction, WaveletExpansion, check_telescoping, delta_projection,
                  e_projection, expand, inner, norm2, parseval_defect, reconstruct)

__version__ = "0.1.0"

__all__ = [
    "AlpertFunction", "BoxMeasure", "ConstructionReport", "DyadicCube", "DyadicInterval",
    "EXACT", "FLOAT", "Measure", "PiecewiseFunction", "WaveletExpansion", "build_alpert",
    "check_telescoping", "cube_at", "delta_projection", "descendants", "dim_detail_space",
    "e_projection", "expand", "gram_basis", "haar", "inner", "interval_at", "k2_special",
    "lebesgue", "load", "loads", "moment_matrix", "norm2", "parse_label", "parseval_defect",
    "point_masses", "projection_form", "rank_pd", "reconstruct", "validate", "verify_basis",
]
