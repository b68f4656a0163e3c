"""Tests for cnn-spreading."""
