"""Error types shared across the toolkit."""


class InputError(ValueError):
    """Invalid user input: malformed files, violated invariants, bad options.

    The CLI maps this to exit code 2; any other exception that escapes a
    subcommand is treated as an internal error and maps to exit code 3.
    """
