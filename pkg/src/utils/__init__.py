"""
Utility modules for the FEM bus simulator.
This package contains shared functionality: the error hierarchy, bit-level
payload helpers and the HTTP client of the tester service.
"""
