"""Learned column pricing: a pointer network over candidate-column features.

Consumes the solver's training JSONL and speaks its line-delimited JSON
bridge on stdin/stdout; the solver side is reached only through those files
and streams, never imported.
"""

__version__ = "0.1.0"
