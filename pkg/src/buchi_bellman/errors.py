"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (bad documents, bad
flags; CLI exit code 2) and :class:`PreconditionError` (a well-formed input
that an operation cannot accept; CLI exit code 3).
"""


class BuchiBellmanError(Exception):
    """Base class for every error raised by this package."""


class InputError(BuchiBellmanError, ValueError):
    pass


class PreconditionError(BuchiBellmanError):
    pass


class ModelSyntaxError(InputError):
    def __init__(self, message, line, col):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class SchemaError(InputError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class InvariantViolation(InputError):
    pass


class UnknownAtom(InputError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown atom {name!r}")


class GuardSyntaxError(InputError):
    def __init__(self, text, pos, message):
        self.text = text
        self.pos = pos
        super().__init__(f"guard {text!r} at offset {pos}: {message}")


class MissingState(InputError):
    def __init__(self, state):
        self.state = state
        super().__init__(f"policy has no choice for state {state!r}")


class IllegalAction(InputError):
    def __init__(self, state, action):
        self.state = state
        self.action = action
        super().__init__(f"action {action!r} is not allowed in state {state!r}")


class PartialPolicy(PreconditionError):
    def __init__(self, state):
        self.state = state
        super().__init__(f"policy is undefined at state {state!r}")


class AtomMismatch(InputError):
    pass


class InvalidLDBA(InputError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid LDBA: " + "; ".join(self.violations))


class InvalidDiscounts(InputError):
    def __init__(self, gamma, gamma_b):
        super().__init__(
            f"discounts must satisfy 0 < gamma_B < gamma <= 1, got gamma={gamma!r}, gamma_B={gamma_b!r}"
        )


class RequiresGammaLessThanOne(PreconditionError):
    pass


class RequiresGammaOne(PreconditionError):
    pass


class SingularSystem(BuchiBellmanError):
    """A linear solve that the theory guarantees to be regular was not.

    Raised as an internal defect, never as a user error.
    """


class RejectingBsccPresent(PreconditionError):
    def __init__(self, bsccs):
        self.bsccs = [list(b) for b in bsccs]
        super().__init__(f"chain has rejecting BSCC(s): {self.bsccs}")


class ModeRequiresGammaOne(PreconditionError):
    pass
