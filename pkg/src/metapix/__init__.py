"""metapix: inverse design toolkit for 1-bit reconfigurable pixelated meta-atoms."""

__version__ = "0.1.0"
