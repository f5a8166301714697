"""
Configuration and error types for the pcode pipeline.
"""

__version__ = "0.1.0"
