"""Exception hierarchy. Every error raised by the package derives from SubstrateError."""


class SubstrateError(Exception):
    pass


# framework
class UnknownProvenance(SubstrateError):
    pass


class NonEnumerable(SubstrateError):
    pass


class EmptyRestriction(SubstrateError):
    pass


class VariationError(SubstrateError):
    pass


# machines / abstraction
class MachineError(SubstrateError):
    """Malformed machine definition (partial table, ragged labels, ...)."""


class UnknownState(SubstrateError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownInput(SubstrateError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class AlphabetMismatch(SubstrateError):
    pass


class HorizonTooLarge(SubstrateError):
    pass


# rnn
class DimensionMismatch(SubstrateError):
    pass


class NonFiniteValue(SubstrateError):
    pass


class InvalidPermutation(SubstrateError):
    pass


# turing
class InvalidInputSymbol(SubstrateError):
    pass


class BoundsExceeded(SubstrateError):
    pass


class NotHalted(SubstrateError):
    pass


class StepCountMismatch(SubstrateError):
    pass


# theories
class WrongSystemFamily(SubstrateError):
    pass


class UnmappedReport(SubstrateError):
    pass


# harness
class ParseError(SubstrateError):
    pass


class ValidationError(SubstrateError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class BudgetExceeded(SubstrateError):
    pass
