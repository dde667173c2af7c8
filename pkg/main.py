"""Command line entry point for PencilProny."""

from src.app.pipelines.cli import main

if __name__ == "__main__":
    main()
