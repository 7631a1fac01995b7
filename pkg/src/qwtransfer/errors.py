"""Exception types raised by the library."""


class QWTransferError(Exception):
    """Base class for numeric/runtime failures (CLI exit code 3)."""


class EmptyPosition(QWTransferError):
    """Conditioning on a position that carries (numerically) no weight."""


class NonUnitaryCoin(QWTransferError, ValueError):
    pass


class ImaginaryResidue(QWTransferError):
    """A trace that should be real came out with a sizeable imaginary part."""


class ZeroInitialEntanglement(QWTransferError):
    pass


class ZeroSuccess(QWTransferError):
    """A projective post-selection with vanishing success probability."""


class MissingSetting(QWTransferError, KeyError):
    pass


class DegenerateCounts(QWTransferError):
    pass
