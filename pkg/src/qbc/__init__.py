"""Broadcast father protocol toolkit.

Dense simulation of decoupling-based one-shot broadcast coding and numerical
evaluation of the associated rate regions.
"""

__version__ = "0.1.0"
