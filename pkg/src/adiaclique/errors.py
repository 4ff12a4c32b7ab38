class AdiaCliqueError(Exception):
    """Base class for errors raised by this package."""


class ResourceCapError(AdiaCliqueError):
    """A configured size, dimension or attempt cap would be exceeded."""


class SamplingCapError(ResourceCapError):
    def __init__(self, message, attempts, seeds=()):
        super().__init__(message)
        self.attempts = attempts
        self.seeds = tuple(seeds)


class IntegrationError(AdiaCliqueError):
    """Time integration produced non-finite amplitudes."""
