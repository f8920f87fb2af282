"""Artificial immune system algorithms for optimisation, clustering and anomaly detection."""
