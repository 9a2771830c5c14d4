"""Exception hierarchy shared by all modules.

``DomainError`` covers inputs that violate an operation's precondition; the CLI
maps it to exit code 1.  ``InvariantViolation`` means the library contradicted
itself and maps to exit code 3.
"""


class DomainError(ValueError):
    code = "domain-error"


class InvariantViolation(AssertionError):
    code = "internal-invariant-violation"


class PointNotOnCurve(DomainError):
    code = "point-not-on-curve"


class NotInKnownOrbits(DomainError):
    code = "not-in-known-orbits"


class OriginBaseMissing(DomainError):
    code = "origin-base-missing"


class NotAntisymmetric(DomainError):
    code = "not-antisymmetric"


class UnregisteredBase(DomainError):
    code = "unregistered-base"


class NotSigma1Invariant(DomainError):
    code = "not-sigma1-invariant"


class UnsupportedIdeal(DomainError):
    code = "unsupported-ideal"


class MissingMap(DomainError):
    code = "constraint-references-missing-map"


class NotRepresentative(DomainError):
    code = "p-not-representative"


class NoStabilization(DomainError):
    code = "no-stabilization-within-N"


class ProfileViolatesContainment(DomainError):
    code = "profile-violates-containment"


class InfinitelyManyExceptions(DomainError):
    code = "infinitely-many-exceptions"


class TruncationTooShort(DomainError):
    code = "truncation-too-short"


class InvolutionMismatch(DomainError):
    code = "involution-mismatch"


class DoesNotDescend(DomainError):
    code = "does-not-descend"


class NotFlat(DomainError):
    code = "not-flat-at-conductor"


class NotFlatAtFixedScheme(DomainError):
    code = "not-flat-at-Z"


class UnregisteredInstance(DomainError):
    code = "unregistered-instance"


class NonTorsionInput(DomainError):
    code = "non-torsion-input"


class IncompatibleIso(DomainError):
    code = "incompatible-iso"
