"""Cross-domain structure preserving projection."""
