"""Entry point for python -m dworktheta."""

from .cli import main

if __name__ == "__main__":
    main()
