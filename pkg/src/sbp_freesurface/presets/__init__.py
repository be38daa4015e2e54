"""Experiment presets shipped as INI package data."""
