"""Module entry point: ``python -m webdeps``."""

from webdeps.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
