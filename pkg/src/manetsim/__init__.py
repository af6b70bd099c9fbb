"""Deterministic discrete-event simulator for AODV, DSDV and DSR over mobile nodes."""

__version__ = "0.1.0"

PROTOCOLS = ("aodv", "dsdv", "dsr")
