"""Transformer scorer bridge for conditioning bundles.

Consumes the bundle JSONL wire format (re-tokenizing each text segment
with its own scheme while preserving the 512/1024 layout), fine-tunes an
encoder with a two-layer sigmoid head, and emits score files the core
toolkit validates and ingests. Fully independent of the core package.
"""

__version__ = "0.1.0"
