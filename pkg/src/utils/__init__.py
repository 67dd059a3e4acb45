"""
Utility functions for JunctionWalk.
"""
