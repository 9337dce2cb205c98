"""Renyi divergence, information, capacity and centers on finite and Poisson families."""
