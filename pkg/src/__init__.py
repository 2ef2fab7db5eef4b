"""W causal workbench: parsing, grounding, solving and causal analysis of W theories."""

__version__ = "0.1.0"
