"""Generalized simultaneous perturbation gradient estimation toolkit."""
