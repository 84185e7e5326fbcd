"""High-girth partial Steiner triple systems via constrained random removal.

Subpackages map to the pipeline stages: configuration catalogs (`configs`),
definition-level sparseness oracles (`sparse_check`), the removal-process
engine (`process`), analytic trajectories (`trajectory`), empirical tracking
(`stats`), rooted-extension counting (`extensions`), general block designs
(`general_designs`), and the batch CLI (`cli`).
"""

__version__ = "0.1.0"
