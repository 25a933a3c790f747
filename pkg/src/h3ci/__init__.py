"""Conical intersections of H3+ with a variance-based contracted quantum eigensolver."""
