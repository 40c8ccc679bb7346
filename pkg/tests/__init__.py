"""Tests for contents-autouploader."""
