"""Module entrypoint for python -m dtsafety."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
