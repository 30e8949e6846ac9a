"""
Utility modules for apfree.
"""
