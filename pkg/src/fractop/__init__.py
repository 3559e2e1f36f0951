"""Topology automata, separation metrics and conformal dimension bounds for self-similar sets."""
__version__ = "0.1.0"

from .errors import FractopError  # noqa: F401
from .symbolic_ifs import EvWord, Identification, IfsSpec, Similitude, parse_word  # noqa: F401
