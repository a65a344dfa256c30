"""cwtail entrypoint.

Run with:
  python -m cwtail fit --k 54
"""

from cwtail.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
