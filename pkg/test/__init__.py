"""
Test package for the FEM bus simulator.
"""
