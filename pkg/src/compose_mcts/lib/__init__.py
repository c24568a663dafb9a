"""Shared configuration, error types and seeded randomness."""
