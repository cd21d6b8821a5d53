"""Exception hierarchy shared by all modules."""


class MixedCellsError(Exception):
    """Base class for every error raised by this package."""


class InputError(MixedCellsError):
    """The problem instance violates a structural invariant."""


class RankDeficient(InputError):
    """The supports span a lattice of rank smaller than the dimension.

    The mixed volume is zero in that case.
    """


class DegenerateCell(MixedCellsError):
    """A cell has zero volume, which signals a genericity failure upstream."""


class GenericityFailure(MixedCellsError):
    """A floating point tie that cannot happen for a lifting in general position."""


class SingularMatrix(GenericityFailure):
    pass


class IllConditioned(GenericityFailure):
    pass


class SingularUpdate(GenericityFailure):
    pass


class HashCollision(MixedCellsError):
    """Two distinct facets received the same hash value."""


class InstanceTooLarge(MixedCellsError):
    pass


class VerificationFailure(MixedCellsError):
    pass


class UnsupportedFamily(MixedCellsError):
    pass


class TransportError(MixedCellsError):
    pass
