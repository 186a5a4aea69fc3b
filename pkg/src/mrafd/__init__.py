"""Full-duplex link simulation with a pixel-reconfigurable receive antenna."""

__version__ = "0.1.0"
