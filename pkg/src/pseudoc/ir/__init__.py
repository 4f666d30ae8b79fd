from .model import (
    BIN_OPS,
    CMP_OPS,
    UN_OPS,
    LOW_BITS_OPS,
    SIGN_SENSITIVE_OPS,
    AddrOf,
    ArrayIndex,
    Assign,
    BasicBlock,
    BinOp,
    Branch,
    Call,
    CallExpr,
    Cast,
    Cmp,
    Const,
    ControlFlowGraph,
    DataType,
    Deref,
    Edge,
    Expression,
    IndirectJump,
    Instruction,
    IrError,
    Jump,
    Phi,
    Return,
    UnOp,
    Variable,
    BOOL,
    CHAR,
    I8,
    I16,
    I32,
    I64,
    U8,
    U16,
    U32,
    U64,
    VOID,
    int_type,
    is_terminator,
    ptr_to,
    validate_cfg,
)
from .textio import IrParseError, parse_ir, render_expr, render_instr, serialize_ir, serialize_module
from .analysis import (
    DominatorTree,
    NaturalLoop,
    back_edges,
    compute_dominator_tree,
    natural_loops,
    reverse_postorder,
    verify_ssa,
)
