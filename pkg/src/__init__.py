"""
thermoctl: work extraction under restricted control in quantum thermodynamics.
"""

__version__ = "0.1.0"
