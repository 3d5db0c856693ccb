"""Hot-kernel backend selection.

Prefers the compiled Cython extension; falls back to the numpy
implementation when the extension was not built.  Set
``DYNCAP_KERNELS=python`` to force the fallback (used by the
benchmark and the backend-equivalence tests).
"""

import os

from . import _pykernels

if os.environ.get("DYNCAP_KERNELS", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from . import _cykernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND

eval_a = _impl.eval_a
eval_tau = _impl.eval_tau
eval_tau_prime = _impl.eval_tau_prime
neg_pc_prime = _impl.neg_pc_prime
beta_eps_eval = _impl.beta_eps_eval
beta_eps_invert = _impl.beta_eps_invert
