"""Enterprise RAG assistant service.

Ingests heterogeneous sources into per-source vector indexes and answers
queries through a routed retrieve/augment/generate/fuse pipeline, with
rolling conversation history and usage monitoring. All LLM and embedding
calls go through pluggable gateways so the whole system runs offline.
"""

__version__ = "0.1.0"
