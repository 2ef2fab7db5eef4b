"""HTTP surface for the W causal workbench."""
