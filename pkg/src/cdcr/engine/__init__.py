"""Staged, sharded pipeline execution with a persistent entity store."""
