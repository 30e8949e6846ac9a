"""
Command blueprints for apfree.
"""
