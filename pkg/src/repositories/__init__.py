"""
Result repository module for experiment outputs.
This module persists replication rows, table cells, sweeps and summaries as CSV and JSON files.
"""
