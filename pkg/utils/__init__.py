"""
Shared helpers: numerics (finite differences, samplers) and file I/O.
"""
