"""
Scenario runner, trace recorder, oracles and campaign aggregation.
"""
