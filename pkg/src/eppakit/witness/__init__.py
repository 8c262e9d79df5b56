"""Layered witness constructions."""
