"""Evaluation protocol: exact accuracy, seeded folds, ablation, country reports.

Accuracy is kept as an exact rational and only converted to float at the
edges. Fold assignment is a pure function of (n, k, seed), so every subset in
an ablation grid sees identical folds. Reports echo the resolved run
configuration and its SHA-256 so artifacts are reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import random
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .bayes import NaiveBayesModel, classify, train
from .errors import (
    EmptyEvaluationSet,
    InvalidFoldCount,
    MalformedInput,
)
from .features import (
    ALL_KINDS,
    FeatureKind,
    FeatureVector,
    extract_features,
    kind_from_name,
    ordered_kinds,
)
from .tweet_model import OTHER_LABEL, TweetRecord, is_country_code, record_from_dict

DEFAULT_MIN_COUNT = 15

LIMITED_INFORMATION = "LIMITED_INFORMATION"
BIG_CLASS = "BIG_CLASS"
OOV_ONLY = "OOV_ONLY"

_K = FeatureKind

# Feature subset grid for the standard ablation run, in presentation order.
ABLATION_PRESETS: dict[str, tuple[tuple[FeatureKind, ...], ...]] = {
    "table1": (
        (_K.LOCATION,),
        (_K.TIMEZONE,),
        (_K.TWEET_LANGUAGE,),
        (_K.GEOPARSED,),
        (_K.UTC_OFFSET,),
        (_K.USER_LANGUAGE,),
        (_K.LOCATION, _K.GEOPARSED),
        (_K.LOCATION, _K.TIMEZONE),
        (_K.LOCATION, _K.TIMEZONE, _K.TWEET_LANGUAGE),
        (_K.TIMEZONE, _K.GEOPARSED),
        (_K.TWEET_LANGUAGE, _K.GEOPARSED),
        (_K.LOCATION, _K.TIMEZONE, _K.TWEET_LANGUAGE, _K.GEOPARSED),
        (_K.LOCATION, _K.TIMEZONE, _K.GEOPARSED),
        ALL_KINDS,
    ),
}

# Kind sets behind the per-country report's accuracy columns.
REPORT_KIND_SETS: tuple[tuple[FeatureKind, ...], ...] = (
    (_K.LOCATION, _K.TIMEZONE, _K.GEOPARSED),
    (_K.LOCATION, _K.TIMEZONE, _K.TWEET_LANGUAGE),
    (_K.LOCATION, _K.TIMEZONE, _K.TWEET_LANGUAGE, _K.GEOPARSED),
)


def kinds_label(kinds: Iterable[FeatureKind]) -> str:
    return "+".join(kind.value for kind in ordered_kinds(kinds))


def parse_kinds_label(text: str) -> tuple[FeatureKind, ...]:
    """Inverse of kinds_label, accepting any order, e.g. "timezone+location"."""
    names = [part.strip() for part in text.split("+") if part.strip()]
    if not names:
        raise ValueError("empty feature kind list")
    return ordered_kinds(kind_from_name(name) for name in names)


def config_digest(config: dict) -> str:
    """SHA-256 of the canonical JSON encoding of a config echo."""
    canonical = json.dumps(config, ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def fraction_json(value: Fraction) -> dict:
    return {
        "fraction": f"{value.numerator}/{value.denominator}",
        "value": float(value),
    }


@dataclass
class LabeledDataset:
    """Tweets paired with ground-truth countries, plus a source tag for echoes."""

    examples: list[tuple[TweetRecord, str]]
    source: str = ""

    def __post_init__(self) -> None:
        for _, label in self.examples:
            if not is_country_code(label):
                raise ValueError(f"invalid country label {label!r}")

    def __len__(self) -> int:
        return len(self.examples)

    def labels(self) -> list[str]:
        return [label for _, label in self.examples]


def load_labeled_ndjson(path: str | Path) -> LabeledDataset:
    """Read a labeled NDJSON file: flattened record fields plus "country"."""
    path = Path(path)
    examples: list[tuple[TweetRecord, str]] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedInput(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise MalformedInput(f"{path}:{lineno}: record must be a JSON object")
            label = obj.get("country")
            if not is_country_code(label):
                raise MalformedInput(f"{path}:{lineno}: missing or invalid country label")
            examples.append((record_from_dict(obj), label))
    return LabeledDataset(examples, source=str(path))


def accuracy(predictions: Iterable[tuple[str, str]]) -> Fraction:
    """Exact fraction of (predicted, true) pairs that match."""
    pairs = list(predictions)
    if not pairs:
        raise EmptyEvaluationSet("no predictions to score")
    correct = sum(1 for predicted, true in pairs if predicted == true)
    return Fraction(correct, len(pairs))


@dataclass(frozen=True)
class FoldAssignment:
    """Deterministic example-to-fold map for one (n, k, seed) triple."""

    n: int
    k: int
    seed: int
    folds: tuple[int, ...]

    def indices_in(self, fold: int) -> list[int]:
        return [i for i in range(self.n) if self.folds[i] == fold]

    def sizes(self) -> list[int]:
        sizes = [0] * self.k
        for fold in self.folds:
            sizes[fold] += 1
        return sizes


def kfold_split(n: int, k: int, seed: int) -> FoldAssignment:
    """Shuffle indices with the seed, deal them round-robin into k folds.

    Fold sizes differ by at most one. The same triple always produces the
    same assignment.
    """
    if not 2 <= k <= n:
        raise InvalidFoldCount(f"need 2 <= k <= {n}, got k={k}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    folds = [0] * n
    for position, index in enumerate(order):
        folds[index] = position % k
    return FoldAssignment(n=n, k=k, seed=seed, folds=tuple(folds))


@dataclass
class EvaluationReport:
    """Cross-validation outcome: pooled accuracy, per-fold accuracies, confusion."""

    kinds: tuple[FeatureKind, ...]
    pooled_accuracy: Fraction
    mean_fold_accuracy: Fraction
    fold_accuracies: tuple[Fraction, ...]
    fold_sizes: tuple[int, ...]
    confusion: dict[str, dict[str, int]]
    n_evaluated: int
    config: dict = field(default_factory=dict)

    @property
    def config_sha256(self) -> str:
        return config_digest(self.config)

    def to_json_dict(self) -> dict:
        return {
            "kinds": [kind.value for kind in self.kinds],
            "n_evaluated": self.n_evaluated,
            "accuracy_pooled": fraction_json(self.pooled_accuracy),
            "accuracy_mean_of_folds": fraction_json(self.mean_fold_accuracy),
            "folds": [
                {
                    "fold": index,
                    "size": self.fold_sizes[index],
                    "accuracy": fraction_json(value),
                }
                for index, value in enumerate(self.fold_accuracies)
            ],
            "confusion": {
                true: dict(sorted(row.items()))
                for true, row in sorted(self.confusion.items())
            },
            "config": self.config,
            "config_sha256": self.config_sha256,
        }


def _base_config(
    *,
    kinds: tuple[FeatureKind, ...],
    alpha: float,
    k: int,
    seed: int,
    orientation: str,
    uniform_priors: bool,
    case_fold: bool,
    source: str,
    extra: dict | None,
) -> dict:
    config = {
        "kinds": [kind.value for kind in kinds],
        "alpha": alpha,
        "k": k,
        "seed": seed,
        "fold_orientation": orientation,
        "uniform_priors": uniform_priors,
        "case_fold": case_fold,
        "dataset_source": source,
    }
    if extra:
        config.update(extra)
    return config


def _run_folds(
    vectors: Sequence[FeatureVector],
    labels: Sequence[str],
    assignment: FoldAssignment,
    kinds: tuple[FeatureKind, ...],
    alpha: float,
    orientation: str,
    uniform_priors: bool,
    config: dict,
) -> EvaluationReport:
    if orientation not in ("standard", "inverted"):
        raise ValueError(f"unknown fold orientation {orientation!r}")
    pooled: list[tuple[str, str]] = []
    fold_accuracies: list[Fraction] = []
    fold_sizes: list[int] = []
    confusion: dict[str, dict[str, int]] = {}
    for fold in range(assignment.k):
        if orientation == "standard":
            train_indices = [i for i in range(assignment.n) if assignment.folds[i] != fold]
            test_indices = assignment.indices_in(fold)
        else:
            train_indices = assignment.indices_in(fold)
            test_indices = [i for i in range(assignment.n) if assignment.folds[i] != fold]
        model = train(
            ((vectors[i], labels[i]) for i in train_indices),
            alpha=alpha,
            enabled_kinds=kinds,
        )
        fold_pairs = [
            (classify(model, vectors[i], uniform_priors=uniform_priors), labels[i])
            for i in test_indices
        ]
        fold_accuracies.append(accuracy(fold_pairs))
        fold_sizes.append(len(fold_pairs))
        pooled.extend(fold_pairs)
        for predicted, true in fold_pairs:
            row = confusion.setdefault(true, {})
            row[predicted] = row.get(predicted, 0) + 1
    mean_folds = sum(fold_accuracies, Fraction(0)) / len(fold_accuracies)
    return EvaluationReport(
        kinds=kinds,
        pooled_accuracy=accuracy(pooled),
        mean_fold_accuracy=mean_folds,
        fold_accuracies=tuple(fold_accuracies),
        fold_sizes=tuple(fold_sizes),
        confusion=confusion,
        n_evaluated=len(pooled),
        config=config,
    )


def cross_validate(
    data: LabeledDataset,
    k: int,
    kinds: Iterable[FeatureKind] = ALL_KINDS,
    alpha: float = 1.0,
    seed: int = 0,
    geoparser=None,
    *,
    orientation: str = "standard",
    uniform_priors: bool = False,
    case_fold: bool = True,
    config: dict | None = None,
) -> EvaluationReport:
    """Seeded k-fold cross-validation over one feature subset.

    "standard" orientation trains on k-1 folds and tests on the held-out
    fold; "inverted" trains on a single fold and tests on the other k-1.
    """
    if not data.examples:
        raise EmptyEvaluationSet("dataset has no examples")
    labels = data.labels()
    if len(set(labels)) < 2:
        raise ValueError("cross-validation needs at least two distinct countries")
    kinds_t = ordered_kinds(kinds)
    assignment = kfold_split(len(labels), k, seed)
    vectors = [
        extract_features(tweet, geoparser, kinds_t, case_fold=case_fold)
        for tweet, _ in data.examples
    ]
    echo = _base_config(
        kinds=kinds_t,
        alpha=alpha,
        k=k,
        seed=seed,
        orientation=orientation,
        uniform_priors=uniform_priors,
        case_fold=case_fold,
        source=data.source,
        extra=config,
    )
    return _run_folds(vectors, labels, assignment, kinds_t, alpha, orientation, uniform_priors, echo)


@dataclass
class AblationRow:
    kinds: tuple[FeatureKind, ...]
    report: EvaluationReport

    @property
    def label(self) -> str:
        return kinds_label(self.kinds)


def ablate(
    data: LabeledDataset,
    subsets: Iterable[Iterable[FeatureKind]],
    k: int,
    alpha: float = 1.0,
    seed: int = 0,
    geoparser=None,
    *,
    orientation: str = "standard",
    uniform_priors: bool = False,
    case_fold: bool = True,
    config: dict | None = None,
) -> list[AblationRow]:
    """Cross-validate every feature subset against identical folds.

    Features are extracted once for the union of all subsets and restricted
    per row, so a value's presence never depends on which row is running.
    """
    subset_list = [ordered_kinds(subset) for subset in subsets]
    if not subset_list:
        raise ValueError("no feature subsets given")
    if not data.examples:
        raise EmptyEvaluationSet("dataset has no examples")
    labels = data.labels()
    if len(set(labels)) < 2:
        raise ValueError("ablation needs at least two distinct countries")
    union = ordered_kinds(kind for subset in subset_list for kind in subset)
    assignment = kfold_split(len(labels), k, seed)
    full_vectors = [
        extract_features(tweet, geoparser, union, case_fold=case_fold)
        for tweet, _ in data.examples
    ]
    rows: list[AblationRow] = []
    for subset in subset_list:
        keep = set(subset)
        vectors = [
            {kind: value for kind, value in vector.items() if kind in keep}
            for vector in full_vectors
        ]
        echo = _base_config(
            kinds=subset,
            alpha=alpha,
            k=k,
            seed=seed,
            orientation=orientation,
            uniform_priors=uniform_priors,
            case_fold=case_fold,
            source=data.source,
            extra=config,
        )
        rows.append(
            AblationRow(
                kinds=subset,
                report=_run_folds(
                    vectors, labels, assignment, subset, alpha, orientation, uniform_priors, echo
                ),
            )
        )
    return rows


def summary_average(values: Sequence[float]) -> float:
    """Unweighted mean, as used by the report summary row."""
    return statistics.mean(values)


def summary_population_stddev(values: Sequence[float]) -> float:
    """Population standard deviation (divide by N), as used by the summary row."""
    return statistics.pstdev(values)


def collapse_region(labels: Iterable[str], region: Iterable[str]) -> list[str]:
    """Map labels outside the kept region to the collapse label.

    Idempotent: the collapse label itself stays collapsed.
    """
    kept = set(region)
    if not kept:
        raise ValueError("region must be non-empty")
    return [label if label in kept else OTHER_LABEL for label in labels]


def collapse_dataset(data: LabeledDataset, region: Iterable[str]) -> LabeledDataset:
    collapsed = collapse_region(data.labels(), region)
    return LabeledDataset(
        examples=[(tweet, label) for (tweet, _), label in zip(data.examples, collapsed)],
        source=data.source,
    )


def load_region(path: str | Path) -> frozenset[str]:
    """Read a region file: one alpha-2 code per line, # comments allowed."""
    path = Path(path)
    codes: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not is_country_code(line):
                raise ValueError(f"{path}:{lineno}: invalid country code {line!r}")
            if line == OTHER_LABEL:
                raise ValueError(f"{path}:{lineno}: region must not contain the collapse label")
            codes.add(line)
    if not codes:
        raise ValueError(f"{path}: region file has no codes")
    return frozenset(codes)


def default_region() -> frozenset[str]:
    """The bundled Europe region."""
    from importlib import resources

    text = resources.files("tweetcountry").joinpath("data", "europe.txt").read_text("utf-8")
    codes = {
        line.strip()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    }
    return frozenset(codes)


@dataclass
class CountryRow:
    country: str
    n: int
    accuracies: tuple[Fraction, ...]


@dataclass
class PerCountryReport:
    """Accuracy per country for several feature sets, with summary rows.

    Countries with fewer than min_count evaluation tweets are omitted from
    the rows and from the summary statistics. The region row reruns the
    pipeline with every label outside the region collapsed.
    """

    kind_sets: tuple[tuple[FeatureKind, ...], ...]
    rows: tuple[CountryRow, ...]
    average: tuple[float, ...]
    stddev: tuple[float, ...]
    region_name: str
    region_accuracies: tuple[Fraction, ...]
    region_n: int
    min_count: int
    omitted_countries: int
    mode: str
    config: dict = field(default_factory=dict)

    @property
    def config_sha256(self) -> str:
        return config_digest(self.config)

    def column_labels(self) -> list[str]:
        return [kinds_label(kinds) for kinds in self.kind_sets]

    def to_json_dict(self) -> dict:
        return {
            "kind_sets": self.column_labels(),
            "min_count": self.min_count,
            "mode": self.mode,
            "omitted_countries": self.omitted_countries,
            "rows": [
                {
                    "country": row.country,
                    "n": row.n,
                    "accuracies": [fraction_json(value) for value in row.accuracies],
                }
                for row in self.rows
            ],
            "average_percent": list(self.average),
            "stddev_percent": list(self.stddev),
            "region": {
                "name": self.region_name,
                "n": self.region_n,
                "accuracies": [fraction_json(value) for value in self.region_accuracies],
            },
            "config": self.config,
            "config_sha256": self.config_sha256,
        }


def _fit_and_score(
    train_vectors: Sequence[FeatureVector],
    train_labels: Sequence[str],
    eval_vectors: Sequence[FeatureVector],
    kinds: tuple[FeatureKind, ...],
    alpha: float,
    uniform_priors: bool,
) -> list[str]:
    keep = set(kinds)
    model = train(
        (
            ({kind: value for kind, value in vector.items() if kind in keep}, label)
            for vector, label in zip(train_vectors, train_labels)
        ),
        alpha=alpha,
        enabled_kinds=kinds,
    )
    return [
        classify(
            model,
            {kind: value for kind, value in vector.items() if kind in keep},
            uniform_priors=uniform_priors,
        )
        for vector in eval_vectors
    ]


def per_country_report(
    train_data: LabeledDataset,
    eval_data: LabeledDataset | None = None,
    kind_sets: Iterable[Iterable[FeatureKind]] = REPORT_KIND_SETS,
    min_count: int = DEFAULT_MIN_COUNT,
    alpha: float = 1.0,
    geoparser=None,
    region: Iterable[str] | None = None,
    region_name: str = "Europe",
    *,
    uniform_priors: bool = False,
    case_fold: bool = True,
    config: dict | None = None,
) -> PerCountryReport:
    """Accuracy broken down by true country, one column per feature set.

    With no separate eval_data the model is scored on its own training set
    (mode "same-set"); otherwise mode is "held-out". Rows are sorted by
    descending tweet count, then by country code. The summary rows are the
    unweighted mean and the population standard deviation of the row
    percentages. The region row collapses labels outside the region on both
    sides of the pipeline and reports overall accuracy per feature set.
    """
    sets = [ordered_kinds(kinds) for kinds in kind_sets]
    if not sets:
        raise ValueError("no feature kind sets given")
    mode = "same-set" if eval_data is None or eval_data is train_data else "held-out"
    if eval_data is None:
        eval_data = train_data
    if not train_data.examples:
        raise EmptyEvaluationSet("training dataset has no examples")
    if not eval_data.examples:
        raise EmptyEvaluationSet("evaluation dataset has no examples")
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    region_set = frozenset(region) if region is not None else default_region()

    union = ordered_kinds(kind for kinds in sets for kind in kinds)
    train_vectors = [
        extract_features(tweet, geoparser, union, case_fold=case_fold)
        for tweet, _ in train_data.examples
    ]
    train_labels = train_data.labels()
    if eval_data is train_data:
        eval_vectors: Sequence[FeatureVector] = train_vectors
    else:
        eval_vectors = [
            extract_features(tweet, geoparser, union, case_fold=case_fold)
            for tweet, _ in eval_data.examples
        ]
    eval_labels = eval_data.labels()

    per_set_predictions = [
        _fit_and_score(train_vectors, train_labels, eval_vectors, kinds, alpha, uniform_priors)
        for kinds in sets
    ]

    counts: dict[str, int] = {}
    for label in eval_labels:
        counts[label] = counts.get(label, 0) + 1
    qualifying = [country for country, n in counts.items() if n >= min_count]
    qualifying.sort(key=lambda country: (-counts[country], country))

    rows: list[CountryRow] = []
    for country in qualifying:
        indices = [i for i, label in enumerate(eval_labels) if label == country]
        accuracies = tuple(
            Fraction(
                sum(1 for i in indices if predictions[i] == country),
                len(indices),
            )
            for predictions in per_set_predictions
        )
        rows.append(CountryRow(country=country, n=counts[country], accuracies=accuracies))

    percent_columns = [
        [float(row.accuracies[column]) * 100.0 for row in rows]
        for column in range(len(sets))
    ]
    average = tuple(summary_average(column) if column else 0.0 for column in percent_columns)
    stddev = tuple(summary_population_stddev(column) if column else 0.0 for column in percent_columns)

    collapsed_train = collapse_region(train_labels, region_set)
    collapsed_eval = collapse_region(eval_labels, region_set)
    region_accuracies = tuple(
        accuracy(
            list(
                zip(
                    _fit_and_score(
                        train_vectors, collapsed_train, eval_vectors, kinds, alpha, uniform_priors
                    ),
                    collapsed_eval,
                )
            )
        )
        for kinds in sets
    )

    echo = {
        "kind_sets": [kinds_label(kinds) for kinds in sets],
        "alpha": alpha,
        "min_count": min_count,
        "region_name": region_name,
        "region": sorted(region_set),
        "uniform_priors": uniform_priors,
        "case_fold": case_fold,
        "mode": mode,
        "train_source": train_data.source,
        "eval_source": eval_data.source,
    }
    if config:
        echo.update(config)

    return PerCountryReport(
        kind_sets=tuple(sets),
        rows=tuple(rows),
        average=average,
        stddev=stddev,
        region_name=region_name,
        region_accuracies=region_accuracies,
        region_n=len(eval_labels),
        min_count=min_count,
        omitted_countries=len(counts) - len(qualifying),
        mode=mode,
        config=echo,
    )


def majority_class(model: NaiveBayesModel, kind: FeatureKind, value: str) -> str | None:
    """The class with the highest count for one value; ties pick the smaller code."""
    best: str | None = None
    best_count = 0
    for country in sorted(model.class_count):
        count = model.value_count.get(country, {}).get(kind, {}).get(value, 0)
        if count > best_count:
            best, best_count = country, count
    return best


def diagnostic_tags(
    model: NaiveBayesModel, vector: FeatureVector, predicted: str
) -> set[str]:
    """Why a prediction may be off, independent of the true label."""
    tags: set[str] = set()
    if len(vector) <= 1:
        tags.add(LIMITED_INFORMATION)
    in_vocab = [
        (kind, value)
        for kind, value in vector.items()
        if value in model.vocabulary.get(kind, set())
    ]
    if vector and not in_vocab:
        tags.add(OOV_ONLY)
    if in_vocab and all(
        majority_class(model, kind, value) == predicted for kind, value in in_vocab
    ):
        tags.add(BIG_CLASS)
    return tags


def diagnose(
    model: NaiveBayesModel,
    vector: FeatureVector,
    true_label: str,
    *,
    uniform_priors: bool = False,
) -> set[str]:
    """Empty set for a correct prediction, otherwise the diagnostic tags."""
    predicted = classify(model, vector, uniform_priors=uniform_priors)
    if predicted == true_label:
        return set()
    return diagnostic_tags(model, vector, predicted)


def write_evaluation_json(report: EvaluationReport, path: str | Path) -> None:
    text = json.dumps(report.to_json_dict(), ensure_ascii=False, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_evaluation_csv(report: EvaluationReport, path: str | Path) -> None:
    """Rows: one per fold, then pooled and mean-of-folds. Floats use repr."""
    lines = [f"# config_sha256={report.config_sha256}"]
    lines.append("row,correct,total,accuracy")
    for index, value in enumerate(report.fold_accuracies):
        correct = value.numerator * (report.fold_sizes[index] // value.denominator)
        lines.append(f"fold_{index},{correct},{report.fold_sizes[index]},{float(value)!r}")
    pooled = report.pooled_accuracy
    correct_total = pooled.numerator * (report.n_evaluated // pooled.denominator)
    lines.append(f"pooled,{correct_total},{report.n_evaluated},{float(pooled)!r}")
    lines.append(f"mean_of_folds,,,{float(report.mean_fold_accuracy)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_ablation_json(rows: Sequence[AblationRow], path: str | Path) -> None:
    document = {
        "subsets": [
            {
                "kinds": [kind.value for kind in row.kinds],
                "label": row.label,
                "accuracy_pooled": fraction_json(row.report.pooled_accuracy),
                "accuracy_mean_of_folds": fraction_json(row.report.mean_fold_accuracy),
                "n_evaluated": row.report.n_evaluated,
            }
            for row in rows
        ],
        "config": rows[0].report.config if rows else {},
        "config_sha256": rows[0].report.config_sha256 if rows else "",
    }
    text = json.dumps(document, ensure_ascii=False, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_ablation_csv(rows: Sequence[AblationRow], path: str | Path) -> None:
    """One row per subset: an x per enabled kind, then both accuracies."""
    header = [kind.value for kind in FeatureKind]
    lines = []
    if rows:
        lines.append(f"# config_sha256={rows[0].report.config_sha256}")
    lines.append(",".join(header + ["accuracy_pooled", "accuracy_mean_of_folds"]))
    for row in rows:
        flags = ["x" if kind in row.kinds else "" for kind in FeatureKind]
        lines.append(
            ",".join(
                flags
                + [
                    repr(float(row.report.pooled_accuracy)),
                    repr(float(row.report.mean_fold_accuracy)),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _percent(value: Fraction) -> str:
    return f"{float(value) * 100.0:.2f}"


def write_per_country_json(report: PerCountryReport, path: str | Path) -> None:
    text = json.dumps(report.to_json_dict(), ensure_ascii=False, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_per_country_csv(report: PerCountryReport, path: str | Path) -> None:
    """Country rows sorted by size, then Average, Standard deviation, region.

    Accuracy cells are percentages with two decimals; summary cells are
    computed from the exact values before rounding.
    """
    lines = [f"# config_sha256={report.config_sha256}"]
    lines.append(",".join(["country", "n"] + report.column_labels()))
    for row in report.rows:
        lines.append(
            ",".join([row.country, str(row.n)] + [_percent(value) for value in row.accuracies])
        )
    lines.append(",".join(["Average", ""] + [f"{value:.2f}" for value in report.average]))
    lines.append(
        ",".join(["Standard deviation", ""] + [f"{value:.2f}" for value in report.stddev])
    )
    lines.append(
        ",".join(
            [report.region_name, str(report.region_n)]
            + [_percent(value) for value in report.region_accuracies]
        )
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
