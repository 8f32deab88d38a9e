"""Dataset generation, experiment orchestration, caching and the command-line interface."""
