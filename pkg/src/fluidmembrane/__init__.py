"""Spectral simulator for acoustic waves with a membrane boundary."""
