"""
Salt Cavern Storage Potential Application Package.

Main application module for the hydrogen storage potential engine.
Provides the high-level API and command-line interface for scenario
runs, input validation, run comparison and map export.
"""

__version__ = "1.0.0"
