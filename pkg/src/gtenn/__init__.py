"""Spatiotemporal graph embedding for dynamic community detection.

GCN layers whose weights evolve through a GRU, a per-node temporal GRU, a
margin ranking loss with degree-biased negative sampling, SOM or K-means
clustering, and external clustering metrics, plus a dynamic LFR generator.
"""

__version__ = "0.1.0"
