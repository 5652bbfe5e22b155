"""Exception hierarchy shared by every charpoly_tools module."""


class CharpolyError(Exception):
    '''Base class for all errors raised by charpoly_tools'''


class DomainError(CharpolyError, ValueError):
    '''Argument outside the domain of an operation (disk, half-plane, cut)'''


class DegenerateConfigurationError(CharpolyError):
    '''Coincident points or a vanishing Vandermonde factor'''


class FactorizationError(CharpolyError):
    '''Covariance matrix is not numerically positive semidefinite'''


class OrthogonalityError(CharpolyError):
    '''Discretized Stieltjes procedure lost orthogonality'''


class ConvergenceError(CharpolyError):
    '''Iterative evaluation did not converge within its limits'''


class InstabilityError(CharpolyError):
    '''An identity that must hold exactly is violated beyond tolerance'''


class ConfigError(CharpolyError):
    '''Malformed or unknown configuration'''


class CheckFailed(CharpolyError):
    '''An acceptance assertion run under --check failed'''
