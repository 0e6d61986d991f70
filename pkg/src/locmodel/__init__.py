"""Affine Weyl group combinatorics and finite-field lattice-chain models.

Subpackages:
  linalg     exact F_p linear algebra and subspace enumeration
  weyl       extended affine Weyl groups for GL_d and GSp_2g
  admissible admissible/permissible sets and stratum point counts
  latmod     naive / splitting / canonical / unramified chain models
  matschemes explicit matrix-scheme point counters
  cli        verification harness
"""

__version__ = "0.1.0"
