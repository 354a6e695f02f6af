"""
Tester service module for the FEM bus simulator.
This module exposes faultload upload and scenario runs over HTTP, standing in
for the tester application that uploads Where/When/What scripts to the FEM.
"""
