"""Exchange-only spin qubit simulation and exchange-pulse gate synthesis."""

__version__ = "0.1.0"
