"""Concrete smoothed models."""
