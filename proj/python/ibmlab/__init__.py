"""Python bindings for the ibmlab C++ core."""

import json as _json

from ._ibmlab import *  # noqa: F401,F403
from ._ibmlab import __version__, run as _run


def run(args):
    """Run a CLI subcommand in-process and return the manifest as a dict."""
    return _json.loads(_run([str(a) for a in args]))
