"""Rare-event predictive modeling toolkit.

Classical classifiers (logit, elastic net, CART, random forest), small
feed-forward networks, and autoencoder anomaly scoring for extremely
imbalanced tabular outcomes, with deterministic seeded pipelines.
"""

__version__ = "0.1.0"
