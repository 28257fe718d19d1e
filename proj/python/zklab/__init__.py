"""Python front end of zklab.

The compiled module carries the numerics; this package re-exports it and adds
a thin wrapper around the command line.
"""

from ._zklab import (  # noqa: F401
    BoxTooSmallError,
    ConfigError,
    Grid,
    Lab,
    __version__,
    bessel_k0,
    cli,
    evolve,
    invariants,
    lk_series,
)


def run(*args: str) -> str:
    """Run a zklab subcommand and return its stdout; raise on a nonzero exit."""
    code, out, err = cli(list(args))
    if code != 0:
        raise RuntimeError(f"zklab {' '.join(args)} exited with {code}: {err.strip()}")
    return out
