"""Brute-force reference implementations used by the test suite. Not part of the public API."""
