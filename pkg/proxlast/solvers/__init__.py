# -*- coding: utf-8 -*-
"""
Iterative solvers.

Import from the submodules: spgd (run_spgd, run_proj_sgd), ripm, spp, blockprox
and fista (the deterministic reference solver used by oracles.certify_solution).
"""
