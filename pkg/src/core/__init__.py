"""
Graphs, junction trees, samplers and diagnostics for JunctionWalk.
"""
