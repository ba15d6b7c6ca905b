"""Tests for spectral-packets."""
