"""Exception hierarchy shared by every module in the package."""


class CtxProbError(Exception):
    """Base class for all errors raised by ctxprob."""


class MemberOutOfSpace(CtxProbError, ValueError):
    """An event mentions a point that is not in the sample space."""


class SpaceTooLarge(CtxProbError, ValueError):
    pass


class InvalidSpace(CtxProbError, ValueError):
    """Weights are negative or do not sum to one."""


class ZeroConditioningEvent(CtxProbError, ZeroDivisionError):
    """Conditioning on an event (or formula) of probability zero."""


class FormulaSyntaxError(CtxProbError, ValueError):
    """Raised by the formula parser.

    ``offset`` is a byte offset into the UTF-8 encoded input and
    ``expected`` the set of tokens that would have been accepted there.
    """

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        detail = f" (expected one of: {exp})" if exp else ""
        super().__init__(f"{message} at byte {offset}{detail}")


class UnknownPredicate(CtxProbError, LookupError):
    pass


class NonInjectiveExtension(CtxProbError, ValueError):
    pass


class UnknownProperty(CtxProbError, LookupError):
    pass


class UnknownContext(CtxProbError, LookupError):
    pass


class NotJointlyTestable(CtxProbError, ValueError):
    pass


class NoProcedure(CtxProbError, LookupError):
    pass


class NotInDomain(CtxProbError, ValueError):
    """A state lies outside the domain S_E = {S : P_S(E) != 0}."""


class PostconditionViolated(CtxProbError, AssertionError):
    pass


class DimensionMismatch(CtxProbError, ValueError):
    pass


class InvalidOperator(CtxProbError, ValueError):
    """A matrix fails the density-operator or projector invariants."""


class ZeroProbabilityBranch(CtxProbError, ZeroDivisionError):
    pass


class IncompatibleGroup(CtxProbError, ValueError):
    pass


class IrrationalBornValue(CtxProbError, ValueError):
    pass


class ScenarioError(CtxProbError, ValueError):
    """A scenario file cannot be read, parsed or validated."""

    def __init__(self, message, offset=None):
        self.offset = offset
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")
