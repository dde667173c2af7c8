"""Application layer for PencilProny."""
