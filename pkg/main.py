"""neurocause CLI entry point (development wrapper)."""

from neurocause.cli import main

if __name__ == "__main__":
    main()
