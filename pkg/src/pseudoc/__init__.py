"""pseudoc: decompilation middle-end and backend.

Takes SSA-form control-flow-graph IR (a textual format, see docs/) through
data-flow cleanups, out-of-SSA translation, goto-free control-flow
restructuring and C-like code emission.  A built-in IR/AST interpreter acts
as the semantic-equivalence oracle for every transformation.
"""

__version__ = "0.1.0"
