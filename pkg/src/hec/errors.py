"""Exception types shared across the package."""


class HecError(Exception):
    """Base class for all errors raised by this package."""


class IllegalCharacter(HecError):
    def __init__(self, char, line, col):
        super().__init__(f"illegal character {char!r} at {line}:{col}")
        self.char = char
        self.line = line
        self.col = col


class SyntaxError_(HecError):
    """Parse failure. Named with a trailing underscore to avoid shadowing builtins."""

    def __init__(self, message, span=None):
        loc = f" at {span[0]}:{span[1]}" if span else ""
        super().__init__(f"{message}{loc}")
        self.span = span


class UnsupportedOperation(SyntaxError_):
    def __init__(self, op_name, span=None):
        super().__init__(f"unsupported operation '{op_name}'", span)
        self.op_name = op_name


class UnboundOperand(HecError):
    def __init__(self, kind, index):
        super().__init__(f"unbound {kind} #{index}")
        self.kind = kind
        self.index = index


class ScopeViolation(HecError):
    def __init__(self, name):
        super().__init__(f"value {name} escapes its region")
        self.name = name


class CycleDetected(HecError):
    def __init__(self, where):
        super().__init__(f"cycle detected at {where}")
        self.where = where


class MalformedTerm(HecError):
    def __init__(self, message, position=None):
        loc = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{loc}")
        self.position = position


class ArityMismatch(HecError):
    def __init__(self, label, expected, got):
        super().__init__(f"operator {label} expects {expected} children, got {got}")
        self.label = label


class RuleSyntaxError(HecError):
    pass


class RuleUnsound(HecError):
    def __init__(self, rule_text, counterexample):
        super().__init__(f"rule {rule_text} is unsound, e.g. at {counterexample}")
        self.counterexample = counterexample


class NonIntegralFactor(HecError):
    def __init__(self, k1, k2):
        super().__init__(f"step {k2} does not divide step {k1}")


class NonAffineAccess(HecError):
    def __init__(self, what):
        super().__init__(f"non-affine access: {what}")


class OutOfBounds(HecError):
    def __init__(self, memref, index):
        super().__init__(f"index {index} out of bounds for {memref}")
        self.memref = memref
        self.index = index


class NonTermination(HecError):
    def __init__(self, limit):
        super().__init__(f"execution exceeded {limit} steps")


class TrappedOperation(HecError):
    """Division by zero or an over-wide shift during interpretation."""


class SignatureMismatch(HecError):
    pass


class FunctionMismatch(HecError):
    pass
