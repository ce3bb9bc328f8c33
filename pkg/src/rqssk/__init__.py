"""Real-quadrature spatial shift keying over a reconfigurable intelligent surface."""

__version__ = "0.1.0"
