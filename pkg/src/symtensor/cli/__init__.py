"""Command-line interface: ``symtensor verify|bench|solve|info``."""
