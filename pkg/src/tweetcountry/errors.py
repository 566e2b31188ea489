"""Exception types shared across the package."""


class TweetCountryError(Exception):
    """Base class for every error this package raises on purpose."""


class MalformedInput(TweetCountryError):
    """Raw tweet JSON is not an object, or a present field has an invalid type or value."""


class ResolverFailure(TweetCountryError):
    """A tweet carries coordinates but reverse geocoding could not produce a country."""


class GeoparserFailure(TweetCountryError):
    """Forward geocoding of a free-text location failed."""


class RemoteUnavailable(TweetCountryError):
    """A remote geocoding backend could not be reached or refused to answer."""


class InvalidQuery(TweetCountryError):
    """A geocoding query is empty after trimming."""


class ConflictingEntry(TweetCountryError):
    """A gazetteer source maps the same normalized name to two different countries."""


class EmptyTrainingSet(TweetCountryError):
    """Training was requested with zero examples."""


class CorruptModel(TweetCountryError):
    """A model file is unreadable or violates a model invariant."""


class EmptyEvaluationSet(TweetCountryError):
    """Scoring was requested with zero predictions."""


class InvalidFoldCount(TweetCountryError):
    """Fold count k is outside 2 <= k <= number of examples."""
