"""
Salt Cavern Storage Potential Test Suite.

Unit, property and oracle tests for the storage potential engine using pytest.
"""
