"""
FEM bus simulator.
A deterministic transaction-level simulator of an OBC <-> FEM <-> SLP I2C chain
driven by faultload scripts, with trace oracles, campaigns and a CLI.
"""
