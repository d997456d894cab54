"""invrank: verify candidate loop invariants and rerank them contrastively."""

__version__ = "0.1.0"
