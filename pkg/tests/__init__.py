"""
Tests module initialization.
"""