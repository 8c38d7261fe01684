"""Certified-label entangled/separable mixed-state datasets."""
