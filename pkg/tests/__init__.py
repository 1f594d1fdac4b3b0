"""
Tests for uss-sim
"""
