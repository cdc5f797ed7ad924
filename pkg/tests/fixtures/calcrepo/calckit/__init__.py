"""Small numeric/text utility kit used as a benchmark fixture."""
