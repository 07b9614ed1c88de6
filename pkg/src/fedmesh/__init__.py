"""Federated SPARQL query processing over a mesh of endpoints."""

__version__ = "0.1.0"
