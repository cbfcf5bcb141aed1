"""Lattice Seiberg-Witten fields on a product of two flat 2-tori.

Modules: ``quat`` (quaternion algebra and the moment map), ``lattice``
(grids, stencils, slices, SWF1 snapshots), ``sw_ops`` (curvature, Dirac
operator, gauge action, reduction to a surface), ``symplectic`` (the
2-forms on configuration space), ``solver`` (gradient flow), ``verify``
and ``cli`` (seeded checks and the command line).
"""

__version__ = "0.1.0"
