"""
Configuration module for the FEM bus simulator.
"""
