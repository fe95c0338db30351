"""Configuration, sweeps, output files and the command-line interface."""
