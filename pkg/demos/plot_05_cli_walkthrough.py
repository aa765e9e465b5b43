"""
Command-line walkthrough
========================

The ``pebblechain`` command wraps the library. State lives in files under
``--state-dir`` (or ``PEBBLECHAIN_STATE_DIR``). This script drives the same
entry point in-process.
"""

# %%
import tempfile

from pebblechain.cli import main

state_dir = tempfile.mkdtemp()


def cli(*argv):
    code = main(["--state-dir", state_dir, *argv])
    print(f"-> exit {code}")


# %%
# Grow a 16-element chain, switch it to exposure and emit four values.
cli("grow", "--seed", "0100000000000000", "--steps", "15", "--out", "demo.state")
cli("finalize", "--state", "demo.state")
cli("emit", "--state", "demo.state", "--count", "4")

# %%
# Where the pebbles sit right after setup for a 16-element chain.
cli("trace", "--n", "16", "--mode", "setup")
