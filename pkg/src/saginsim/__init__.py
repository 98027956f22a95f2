"""Discrete-time SAGIN offloading simulator with a drift-plus-penalty scheduler."""

__version__ = "0.1.0"
