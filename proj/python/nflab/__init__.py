"""Python front end for the nflab normal-form laboratory.

Numerical kernels live in the compiled ``_nflab`` module; this layer only
converts JSON between text and Python objects.
"""

import json

from ._nflab import (
    CapacityError,
    Error,
    InvalidInput,
    ModelMismatch,
    NumericalFailure,
    ResonanceViolation,
    SpectralModel,
    __version__,
    anharmonic,
    average,
    harmonic,
    position,
    selftest,
    solve_k0,
    zoll,
)
from . import _nflab


def run(config, out_dir=None, propagate=True, write_files=True):
    """Run a config (dict or path to a JSON file). Returns (manifest, exit_code)."""
    if not isinstance(config, dict):
        with open(config) as fh:
            config = json.load(fh)
    text, code = _nflab._run(json.dumps(config), out_dir, propagate, write_files)
    return json.loads(text), code


def compare(a, b):
    return json.loads(_nflab._compare(json.dumps(a), json.dumps(b)))


def decompose(nu):
    """nu as a comma-separated string of exact entries, e.g. "1, sqrt2"."""
    return json.loads(_nflab._decompose(nu))


def diophantine(omega, nu_tilde, kappa=2.0, k_max=50):
    return json.loads(_nflab._diophantine(omega, nu_tilde, kappa, k_max))


__all__ = [
    "CapacityError", "Error", "InvalidInput", "ModelMismatch", "NumericalFailure",
    "ResonanceViolation", "SpectralModel", "__version__", "anharmonic", "average",
    "compare", "decompose", "diophantine", "harmonic", "position", "run", "selftest",
    "solve_k0", "zoll",
]
