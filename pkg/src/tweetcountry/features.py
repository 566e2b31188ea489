"""Turn tweet records into the categorical feature vectors the classifier consumes."""

from __future__ import annotations

import logging
import re
from enum import Enum

from .errors import GeoparserFailure, InvalidQuery, RemoteUnavailable
from .tweet_model import TweetRecord

log = logging.getLogger(__name__)

_WHITESPACE_RUN = re.compile(r"\s+")


class FeatureKind(Enum):
    """The six metadata features, in fixed scoring order."""

    LOCATION = "location"
    TIMEZONE = "timezone"
    TWEET_LANGUAGE = "tweet_language"
    GEOPARSED = "geoparsed"
    UTC_OFFSET = "utc_offset"
    USER_LANGUAGE = "user_language"


ALL_KINDS: tuple[FeatureKind, ...] = tuple(FeatureKind)

# A feature vector holds at most one value per kind; values are never empty.
FeatureVector = dict[FeatureKind, str]

_BY_VALUE = {kind.value: kind for kind in FeatureKind}


def kind_from_name(name: str) -> FeatureKind:
    """Look a kind up by its wire name, e.g. "timezone"."""
    try:
        return _BY_VALUE[name]
    except KeyError:
        raise ValueError(f"unknown feature kind {name!r}") from None


def ordered_kinds(kinds) -> tuple[FeatureKind, ...]:
    """Deduplicate and sort kinds into the fixed scoring order."""
    wanted = set(kinds)
    return tuple(kind for kind in FeatureKind if kind in wanted)


def normalize_place(text: str) -> str:
    """Trim, collapse whitespace runs to single spaces, casefold.

    Gazetteer keys use the same normalization so location features and
    lookups agree byte for byte.
    """
    return _WHITESPACE_RUN.sub(" ", text.strip()).casefold()


def _clean(text: str, case_fold: bool) -> str:
    cleaned = _WHITESPACE_RUN.sub(" ", text.strip())
    return cleaned.casefold() if case_fold else cleaned


def extract_features(
    tweet: TweetRecord,
    geoparser=None,
    enabled=ALL_KINDS,
    *,
    case_fold: bool = True,
) -> FeatureVector:
    """Extract the enabled feature kinds from one tweet.

    Absent metadata simply yields no entry. The geoparsed kind forwards the
    raw user_location through ``geoparser.forward``; lookup misses and
    failures are logged and the entry is omitted, never fatal. Entries are
    inserted in the fixed kind order.
    """
    if not enabled:
        raise ValueError("enabled kinds must be non-empty")
    wanted = set(enabled)
    vector: FeatureVector = {}
    for kind in FeatureKind:
        if kind not in wanted:
            continue
        value = _value_for(kind, tweet, geoparser, case_fold)
        if value:
            vector[kind] = value
    return vector


def _value_for(
    kind: FeatureKind, tweet: TweetRecord, geoparser, case_fold: bool
) -> str | None:
    if kind is FeatureKind.LOCATION:
        if tweet.user_location is None:
            return None
        return _clean(tweet.user_location, case_fold)
    if kind is FeatureKind.TIMEZONE:
        if tweet.time_zone is None:
            return None
        return tweet.time_zone.casefold() if case_fold else tweet.time_zone
    if kind is FeatureKind.TWEET_LANGUAGE:
        return tweet.tweet_language
    if kind is FeatureKind.GEOPARSED:
        if tweet.user_location is None or geoparser is None:
            return None
        if not tweet.user_location.strip():
            return None
        try:
            return geoparser.forward(tweet.user_location)
        except (GeoparserFailure, InvalidQuery, RemoteUnavailable) as exc:
            log.warning("geoparse failed for %r: %s", tweet.user_location, exc)
            return None
    if kind is FeatureKind.UTC_OFFSET:
        if tweet.utc_offset_seconds is None:
            return None
        return str(tweet.utc_offset_seconds)
    if kind is FeatureKind.USER_LANGUAGE:
        return tweet.user_language
    raise AssertionError(f"unhandled kind {kind!r}")
