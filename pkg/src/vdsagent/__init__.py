"""LLM-driven transfer of vehicle dispatching models for container terminals."""

__version__ = "0.1.0"
