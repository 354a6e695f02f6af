"""
Faultload scripts and campaign generation.
"""
