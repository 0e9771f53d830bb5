"""
Unit tests for the analysis tools
"""
