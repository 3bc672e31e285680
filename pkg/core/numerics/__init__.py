"""
Numerics Package
================

Finite-dimensional distributions of the Airy process:
- specfun: Airy functions
- quadrature: Gauss-Legendre rules and half-line maps
- kernel: extended Airy kernel blocks
- fredholm: Nyström determinant, resolvent and identity checks
- odesys: the matrix ODE system and its integrator
- dist: joint distribution values by both routes
- validation: the runtime check suite

Import directly from submodules:
    from core.numerics.dist import joint_cdf
"""
