"""Federated LSTM forecasting simulator with whale-optimization aggregation.

Simulates a fleet of prosumer nodes, each training a small LSTM forecaster
on its own photovoltaic time series. Nodes are grouped by K-means on their
statistical fingerprints, and per cluster a global model is built either by
classic federated averaging (FedAVG) or by a whale-optimization search over
the space of local weight vectors (FedWOA). Everything is deterministic
under a single master seed.
"""

__version__ = "0.1.0"
