"""
Replication tasks for gradient estimation experiments.
This module runs single seeded optimizer replications and reports batch progress.
"""
