"""
viscowave – Green's functions of viscoelastic media near the wavefront.
Completely monotone kernels, material models, dispersion, numerical Laplace
inversion and the wavefront diagnostics built on them.
"""

__version__ = "0.1.0"
