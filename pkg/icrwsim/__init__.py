"""icrwsim - intersection collision risk warning traffic and V2X co-simulator."""

__version__ = "0.1.0"
