from .propagate import propagate_expressions
from .cse import eliminate_common_subexpressions
from .deadcode import eliminate_dead_loops, eliminate_dead_paths
from .casts import eliminate_redundant_casts
from .idioms import DEFAULT_CATALOG, IdiomPattern, revert_compiler_idioms, verify_catalog
from .arrays import detect_array_accesses
from .constants import choose_constant_representation
