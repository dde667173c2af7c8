"""Core functionality: configuration, logging, and the error hierarchy."""
