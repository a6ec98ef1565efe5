"""Least-information retrieval: term weighting, ranking and TREC evaluation."""

__version__ = "0.1.0"
