# crn_osc/errors.py


class CrnOscError(Exception):
    """Base class for all workbench failures."""


class InvalidNetworkError(CrnOscError, ValueError):
    """Malformed complex, reaction, network or network text."""


class TrivialSubspaceError(CrnOscError, ValueError):
    """Stoichiometric subspace is {0}: no basis to factor through."""


class ResourceGuardError(CrnOscError):
    """Labeled count of a (k,l) cell exceeds the configured ceiling."""


class KineticsDomainError(CrnOscError, ValueError):
    """Rates requested outside the domain of the kinetics."""


class IntegrationError(CrnOscError, RuntimeError):
    pass


class NotPeriodicError(CrnOscError):
    """Shooting failed, or the located orbit is trivial or not least-period."""


class EigenvalueError(CrnOscError, RuntimeError):
    pass


class NotHopfPointError(CrnOscError, ValueError):
    """Linearization at the supplied point has no purely imaginary pair."""


class TransformationError(CrnOscError, ValueError):
    """Transformation payload violates the conditions for inheritance."""


class EpsilonSearchError(CrnOscError):
    """No epsilon in the grid produced a certified orbit."""


class DuplicateKeyError(CrnOscError):
    """Two orderly representatives of one cell produced the same canonical key."""
