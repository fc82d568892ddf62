"""Desk-scale data availability oracle with coded interleaving tree
commitments, chunk dispersal, peeling reconstruction and fraud proofs."""

__version__ = "0.1.0"
