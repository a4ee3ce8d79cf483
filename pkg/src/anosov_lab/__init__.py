"""Numerical laboratory for quantized hyperbolic toral automorphisms.

Classical thermodynamic formalism (pressure, rate functions, KS entropy),
torus Weyl/anti-Wick quantization with an exact-Egorov propagator,
semiclassical-measure deviation experiments, quantum entropies with the
entropic uncertainty principle, and observability constants, driven by a
reproducible experiment CLI (`anosov-lab`).
"""

__version__ = "0.1.0"
