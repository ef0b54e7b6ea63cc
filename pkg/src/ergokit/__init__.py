"""Lyapunov spectra of matrix cocycles, metric geometry of the SPD symmetric
space, horofunction drift, and CAT(0) geodesic tracking, with a reproducible
seeded experiment CLI.

Modules
-------
dynsys          base ergodic systems; Birkhoff / Fekete / Kingman estimators
cocycle         matrix cocycles, stable products, functorial constructions
oseledets       Lyapunov spectra, filtrations, splittings, growth diagnostics
symspace        the determinant-one SPD space: distances, Cartan data,
                Busemann functions, pull-back metrics, regularity reports
horofunctions   horofunction bordifications, drift, record-time detection,
                the empirical noncommutative ergodic theorem
cat0            CAT(0) comparison tools, tracking rays, direct integrals,
                the mean subadditive theorem
cli             `ergokit run` / `ergokit report`
"""

__version__ = "0.1.0"
