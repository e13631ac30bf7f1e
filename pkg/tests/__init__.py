"""Tests for the covert package."""
