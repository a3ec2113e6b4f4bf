"""Exceptions"""

# Default messages
DIMENSION_MESSAGE = 'Vector or matrix dimensions do not match.'
PARAMETER_MESSAGE = 'Invalid solver or generator parameter.'
DOMAIN_MESSAGE = 'Dual iterate lies outside the domain of the conjugate g*.'
STALE_CACHE_MESSAGE = 'Quadratic prox cache was factorized for a different gamma.  Rebuild it and retry.'
DIVERGENCE_MESSAGE = 'Iterates diverged.'
UNDEFINED_METRIC_MESSAGE = 'Metric is undefined for a zero reference signal.'
UNSUPPORTED_MESSAGE = 'Oracle does not support this problem size.'


class BdrError(RuntimeError):
    """Parent class for all bdrsplit exceptions"""


class BdrDimensionError(BdrError):
    """Length or shape mismatch"""
    def __init__(self, msg=DIMENSION_MESSAGE, *args):
        super().__init__(msg, *args)


class BdrParameterError(BdrError):
    """Invalid numeric parameter"""
    def __init__(self, msg=PARAMETER_MESSAGE, *args):
        super().__init__(msg, *args)


class BdrDomainError(BdrError):
    """Point outside the domain of an extended-valued function"""
    def __init__(self, msg=DOMAIN_MESSAGE, *args):
        super().__init__(msg, *args)


class BdrStaleCacheError(BdrError):
    """Factorization cache used with the wrong gamma"""
    def __init__(self, msg=STALE_CACHE_MESSAGE, *args):
        super().__init__(msg, *args)


class BdrDivergenceError(BdrError):
    """Solver iterates blew up"""
    def __init__(self, msg=DIVERGENCE_MESSAGE, *args, iterations: int = 0):
        super().__init__(msg, *args)
        self.iterations = iterations


class BdrUndefinedMetricError(BdrError):
    """Quality metric cannot be computed"""
    def __init__(self, msg=UNDEFINED_METRIC_MESSAGE, *args):
        super().__init__(msg, *args)


class BdrUnsupportedError(BdrError):
    """Brute-force oracle asked for too many dimensions"""
    def __init__(self, msg=UNSUPPORTED_MESSAGE, *args):
        super().__init__(msg, *args)


class BdrConfigError(BdrError):
    """Experiment config failed validation"""
    def __init__(self, msg, key=None, *args):
        super().__init__(msg, *args)
        self.key = key


class BdrSignalFileError(BdrError):
    """Signal file could not be parsed"""
    def __init__(self, msg, line=None, *args):
        super().__init__(msg, *args)
        self.line = line
