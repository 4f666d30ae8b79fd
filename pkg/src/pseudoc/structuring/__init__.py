from .astnodes import (
    AstNode,
    AstReturn,
    Break,
    Code,
    CondNode,
    Continue,
    FunctionAst,
    Loop,
    Seq,
    Switch,
    SwitchCase,
    code_instructions,
    dump_sexpr,
    max_cond_depth,
    max_nesting_depth,
)
