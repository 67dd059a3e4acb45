"""
Configuration package for JunctionWalk.
"""
