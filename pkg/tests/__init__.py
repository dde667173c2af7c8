"""Test suite for PencilProny."""
