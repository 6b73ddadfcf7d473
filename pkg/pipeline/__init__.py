"""
Scenario pipeline package.

This package runs storage potential scenarios end to end, writes their
artifacts and compares finished runs.
"""
